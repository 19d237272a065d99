from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Prices the claim over increasing lattice resolutions and fits the
        empirical order of convergence.
        Usage: ./manage.py converge --config run.ini
        """
    command = 'converge'
