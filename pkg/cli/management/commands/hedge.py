from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Funds the lattice hedge of the claim and audits it on the paths of the
        scheme battery; writes the shortfall histogram alongside the report.
        Usage: ./manage.py hedge --config run.ini
        """
    command = 'hedge'
