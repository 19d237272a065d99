from ._base import ReportCommand


class Command(ReportCommand):
    help = """
        Checks the realized quadratic variation against the band and measures
        how fast sums of squared increments approach it.
        Usage: ./manage.py qv --config run.ini
        """
    command = 'qv'
