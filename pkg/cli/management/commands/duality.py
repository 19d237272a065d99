from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Compares the lattice price with Monte Carlo expectations under the
        scheme battery. Exits with 4 when a dual estimate exceeds the price.
        Usage: ./manage.py duality --config run.ini
        """
    command = 'duality'
