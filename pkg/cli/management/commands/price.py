from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Prices the claim of the configuration on the lattice (upper and/or lower
        price, policy summary, optional surface export).
        Usage: ./manage.py price --config run.ini
        """
    command = 'price'
