from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from cli.config import ConfigFileError, load_config
from cli.forms import FORMAT_CHOICES
from cli.reports import write_reports
from cli.runner import run

VALIDATION_FAILURE, INCONSISTENCY, IO_FAILURE = 3, 4, 5


class ReportCommand(BaseCommand):
    """
    Runs one pipeline from a configuration file and writes its report.
    Exits with 3 on invalid input, 4 on a negative duality gap and 5 when
    files cannot be read or written.
    """
    command = None

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help="Run configuration file.")
        parser.add_argument('--seed', type=int, help="Overrides the seed of the [run] section.")
        parser.add_argument('--out', help="Output directory (default: SUPERHEDGE_OUTPUT_DIR or 'reports').")
        parser.add_argument('--format', choices=[choice for choice, label in FORMAT_CHOICES])

    def handle(self, *args, **options):
        try:
            config = load_config(options['config'], self.command)
        except ConfigFileError as err:
            raise CommandError(str(err), returncode=IO_FAILURE)
        except ValidationError as err:
            raise CommandError("\n".join(err.messages), returncode=VALIDATION_FAILURE)
        config = config.with_overrides(seed=options['seed'], output_dir=options['out'], format=options['format'])
        try:
            result = run(self.command, config)
        except ValidationError as err:
            raise CommandError(
                "\n".join("[{}] {}".format(self.command, message) for message in err.messages),
                returncode=VALIDATION_FAILURE)
        try:
            written = write_reports(result, config.output_dir or settings.REPORT_OUTPUT_DIR, config.format)
        except OSError as err:
            raise CommandError("Cannot write the report: %s" % err, returncode=IO_FAILURE)
        for report_path in written:
            self.stdout.write(report_path)
        if result.error is not None:
            raise CommandError(str(result.error), returncode=INCONSISTENCY)
