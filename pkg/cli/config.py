import configparser
import logging
from dataclasses import dataclass, field, replace

from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from .forms import COMMAND_FORMS, BandForm, PayoffForm, RunForm

cli_log = logging.getLogger('SuperHedge.cli')

KNOWN_SECTIONS = ('run', 'band', 'payoff') + tuple(COMMAND_FORMS)


class ConfigFileError(OSError):
    """The configuration file cannot be read."""


@dataclass(frozen=True, eq=False)
class RunConfig:
    """A validated run configuration; `sections` echoes the file as read."""
    path: str
    command: str
    band: object
    payoff: object
    seed: int
    format: str
    output_dir: str
    params: dict = field(default_factory=dict)
    sections: dict = field(default_factory=dict)

    def with_overrides(self, seed=None, output_dir=None, format=None):
        return replace(
            self,
            seed=self.seed if seed is None else int(seed),
            output_dir=output_dir or self.output_dir,
            format=format or self.format)


def read_sections(config_path):
    parser = configparser.ConfigParser(interpolation=None, delimiters=('=', ))
    parser.optionxform = str
    try:
        with open(config_path, 'r') as config_file:
            parser.read_file(config_file)
    except OSError as err:
        raise ConfigFileError(format_lazy(_("Cannot read the configuration {path}: {err}"), path=config_path,
                                          err=err.strerror or err))
    except configparser.Error as err:
        raise ValidationError(
            format_lazy(_("Malformed configuration {path}: {err}"), path=config_path, err=err), code='config')
    return {name: dict(parser.items(name)) for name in parser.sections()}


def load_config(config_path, command):
    """
    Reads and validates the run configuration of a command. Raises a
    ValidationError whose messages name the section and the key of every
    invalid entry.
    """
    sections = read_sections(config_path)
    errors = [
        format_lazy(_("[{section}] Unknown section."), section=name)
        for name in sections if name not in KNOWN_SECTIONS
    ]
    forms = [RunForm(sections.get('run')), BandForm(sections.get('band'))]
    payoff_form = None
    if command != 'qv' or 'payoff' in sections:
        payoff_form = PayoffForm(sections.get('payoff'))
        forms.append(payoff_form)
    band, band_errors = None, []
    if forms[1].is_valid():
        try:
            band = forms[1].build()
        except ValidationError as error:
            band_errors = ["[band] {}".format(message) for message in error.messages]
    command_form = COMMAND_FORMS[command](sections.get(command), horizon=band.horizon if band else None)
    forms.append(command_form)
    for form in forms:
        if not form.is_valid():
            errors.extend(form.error_list())
    errors.extend(band_errors)
    if errors:
        cli_log.debug("Configuration %s rejected: %s", config_path, errors)
        raise ValidationError([str(message) for message in errors])
    run = forms[0].cleaned_data
    return RunConfig(
        path=str(config_path),
        command=command,
        band=band,
        payoff=payoff_form.cleaned_data['payoff'] if payoff_form else None,
        seed=run['seed'],
        format=run['format'],
        output_dir=run['output_dir'],
        params=dict(command_form.cleaned_data),
        sections=sections,
    )
