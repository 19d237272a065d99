from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Estimates the capacity of the claim, with the Markov inequality and the
        capacity axioms checked on exceedance events.
        Usage: ./manage.py capacity --config run.ini
        """
    command = 'capacity'
