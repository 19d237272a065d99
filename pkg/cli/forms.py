"""
One form per section of a run configuration. Values arrive as the strings
of the INI file; keys missing from a section take the field's initial value.
"""
from os import path

from django import forms
from django.conf import settings
from django.core.exceptions import NON_FIELD_ERRORS, ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from core.bands import make_knot_band, make_vol_band, read_knot_table
from core.expressions import parse_expression
from core.payoffs import PAYOFF_KINDS, payoff_from_dict
from lattice.pricing import LOWER, UPPER
from simulate.schemes import IncrementLaw

LAW_CHOICES = tuple((str(law), str(law)) for law in IncrementLaw)
SIDE_CHOICES = ((UPPER, UPPER), (LOWER, LOWER))
FORMAT_CHOICES = (('json', 'json'), ('csv', 'csv'), ('text', 'text'))


class SeparatedField(forms.CharField):
    """A comma-separated list of numbers."""

    def __init__(self, *args, **kwargs):
        self.item_type = kwargs.pop('item_type', float)
        self.min_items = kwargs.pop('min_items', 1)
        super().__init__(*args, **kwargs)

    def to_python(self, value):
        value = super().to_python(value)
        if value in self.empty_values:
            return []
        try:
            return [self.item_type(item) for item in value.split(',') if item.strip()]
        except ValueError:
            raise ValidationError(_("Enter numbers separated by commas."), code='invalid')

    def validate(self, value):
        if self.required and not value:
            raise ValidationError(self.error_messages['required'], code='required')
        if value and len(value) < self.min_items:
            raise ValidationError(
                format_lazy(_("At least {n} values are needed."), n=self.min_items), code='range')


class SectionForm(forms.Form):
    section = None

    def __init__(self, data=None, *args, horizon=None, **kwargs):
        data = dict(data or {})
        # The band's horizon, when known, bounds the keys which are times.
        self.horizon = horizon
        self.unknown_keys = sorted(set(data) - set(self.base_fields))
        defaults = {name: field.initial for name, field in self.base_fields.items() if field.initial is not None}
        defaults.update(data)
        super().__init__(defaults, *args, **kwargs)

    def clean(self):
        cleaned_data = super().clean()
        for key in self.unknown_keys:
            self.add_error(None, ValidationError(
                format_lazy(_("Unknown key '{key}'."), key=key), code='unknown-key', params={'key': key}))
        return cleaned_data

    def error_list(self):
        """The errors as '[section] key: message' lines."""
        lines = []
        for key, errors in self.errors.as_data().items():
            for error in errors:
                for message in error.messages:
                    label = (error.params or {}).get('key') if key == NON_FIELD_ERRORS else key
                    if label:
                        lines.append("[{}] {}: {}".format(self.section, label, message))
                    else:
                        lines.append("[{}] {}".format(self.section, message))
        return lines


class RunForm(SectionForm):
    section = 'run'

    seed = forms.IntegerField(min_value=0, initial=0)
    format = forms.ChoiceField(choices=FORMAT_CHOICES, initial='json')
    output_dir = forms.CharField(required=False)


class BandForm(SectionForm):
    section = 'band'

    sigma_low = forms.FloatField(required=False, min_value=0)
    sigma_high = forms.FloatField(required=False)
    horizon = forms.FloatField(initial=1.0)
    knot_table = forms.CharField(required=False)
    holder_C = forms.FloatField(required=False)
    holder_alpha = forms.FloatField(initial=1.0, min_value=0, max_value=1)

    def clean_horizon(self):
        horizon = self.cleaned_data['horizon']
        if not horizon > 0:
            raise ValidationError(_("The horizon T must be positive."), code='horizon')
        return horizon

    def clean_knot_table(self):
        knot_table = self.cleaned_data['knot_table']
        if knot_table and not path.isfile(knot_table):
            raise ValidationError(
                format_lazy(_("The file {name} was not found."), name=knot_table), code='missing-file')
        return knot_table

    def clean(self):
        cleaned_data = super().clean()
        sigma_low, sigma_high = cleaned_data.get('sigma_low'), cleaned_data.get('sigma_high')
        has_pair = sigma_low is not None or sigma_high is not None
        if has_pair == bool(cleaned_data.get('knot_table')) and not self.has_error('knot_table'):
            self.add_error(None, ValidationError(
                _("Give either sigma_low and sigma_high or a knot_table."), code='band',
                params={'key': 'sigma_low'}))
            return cleaned_data
        if has_pair:
            for key, value in (('sigma_low', sigma_low), ('sigma_high', sigma_high)):
                if value is None:
                    self.add_error(key, ValidationError(_("This field is required."), code='required'))
            if sigma_low is not None and sigma_high is not None and sigma_low > sigma_high:
                message = _("sigma_low > sigma_high")
                self.add_error('sigma_low', ValidationError(message, code='ordering'))
                self.add_error('sigma_high', ValidationError(message, code='ordering'))
        return cleaned_data

    def build(self):
        """The measure band of a valid form."""
        data = self.cleaned_data
        if data.get('knot_table'):
            lower, upper = read_knot_table(data['knot_table'])
            return make_knot_band(lower, upper, data.get('holder_C'), data['holder_alpha'])
        return make_vol_band(data['sigma_low'], data['sigma_high'], data['horizon'])


class PayoffForm(SectionForm):
    section = 'payoff'

    kind = forms.ChoiceField(choices=tuple((kind, kind) for kind in PAYOFF_KINDS), initial='terminal')
    expression = forms.CharField()
    dates = SeparatedField(required=False)
    integrand = forms.CharField(required=False)

    def clean_expression(self):
        parse_expression(self.cleaned_data['expression'])
        return self.cleaned_data['expression']

    def clean_integrand(self):
        if self.cleaned_data['integrand']:
            parse_expression(self.cleaned_data['integrand'])
        return self.cleaned_data['integrand']

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        if cleaned_data['kind'] == 'cylindrical' and not cleaned_data['dates']:
            self.add_error('dates', ValidationError(_("A cylindrical claim needs its fixing dates."), code='range'))
            return cleaned_data
        try:
            cleaned_data['payoff'] = payoff_from_dict(cleaned_data)
        except ValidationError as error:
            # more variables than fixing dates
            self.add_error('expression' if error.code == 'grammar' else 'dates', error)
        return cleaned_data


class EngineForm(SectionForm):
    n_steps = forms.IntegerField(min_value=1, initial=200)


class SimulationForm(EngineForm):
    n_paths = forms.IntegerField(min_value=2, initial=10000)
    law = forms.ChoiceField(choices=LAW_CHOICES, initial=str(IncrementLaw.BINOMIAL))


class PriceForm(EngineForm):
    section = 'price'

    n_steps = forms.IntegerField(min_value=1, initial=400)
    side = forms.ChoiceField(choices=SIDE_CHOICES + (('both', 'both'), ), initial='both')
    export_surface = forms.BooleanField(required=False, initial=False)


class HedgeForm(SimulationForm):
    section = 'hedge'

    tolerance = forms.FloatField(required=False, min_value=0)
    funding = forms.FloatField(initial=1.0, min_value=0)
    histogram_bins = forms.IntegerField(initial=20, min_value=1)
    refinement = forms.IntegerField(required=False, min_value=1)

    def clean_refinement(self):
        return self.cleaned_data['refinement'] or settings.HEDGE_GRID_REFINEMENT


class DualityForm(SimulationForm):
    section = 'duality'

    law = forms.ChoiceField(choices=LAW_CHOICES, initial=str(IncrementLaw.GAUSSIAN))
    policy_feedback = forms.BooleanField(required=False, initial=True)
    allowance = forms.FloatField(required=False, min_value=0)


class CapacityForm(SimulationForm):
    section = 'capacity'

    law = forms.ChoiceField(choices=LAW_CHOICES, initial=str(IncrementLaw.GAUSSIAN))
    alphas = SeparatedField(initial='0.05,0.2')

    def clean_alphas(self):
        alphas = self.cleaned_data['alphas']
        if any(alpha <= 0 for alpha in alphas):
            raise ValidationError(_("The thresholds must be positive."), code='range')
        return sorted(alphas)


class QVForm(SimulationForm):
    section = 'qv'

    law = forms.ChoiceField(choices=LAW_CHOICES, initial=str(IncrementLaw.GAUSSIAN))
    n_steps = forms.IntegerField(min_value=1, initial=400)
    t = forms.FloatField(required=False)
    subdivisions = SeparatedField(item_type=int, initial='4,8,16,32,64', min_items=2)
    fine_steps = forms.IntegerField(min_value=1, required=False)

    def clean_t(self):
        t = self.cleaned_data['t']
        if t is None:
            return self.horizon
        if self.horizon is not None and not 0 < t <= self.horizon:
            raise ValidationError(
                format_lazy(_("The time {t} is outside (0, {horizon}]."), t=t, horizon=self.horizon), code='range')
        if not t > 0:
            raise ValidationError(_("The time must be positive."), code='range')
        return t

    def clean_fine_steps(self):
        return self.cleaned_data['fine_steps'] or settings.SIMULATION_FINE_STEPS

    def clean(self):
        cleaned_data = super().clean()
        fine_steps = cleaned_data.get('fine_steps')
        for n in cleaned_data.get('subdivisions') or ():
            if fine_steps and (n < 1 or n > fine_steps or fine_steps % n):
                self.add_error('subdivisions', ValidationError(
                    format_lazy(_("{n} subdivisions do not divide the fine grid of {fine} steps."),
                                n=n, fine=fine_steps),
                    code='resolution'))
        return cleaned_data


class ConvergeForm(SectionForm):
    section = 'converge'

    steps = SeparatedField(item_type=int, initial='50,100,200,400', min_items=2)
    side = forms.ChoiceField(choices=SIDE_CHOICES, initial=UPPER)


COMMAND_FORMS = {
    'price': PriceForm,
    'hedge': HedgeForm,
    'duality': DualityForm,
    'capacity': CapacityForm,
    'qv': QVForm,
    'converge': ConvergeForm,
}
