import numpy as np
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

# Absolute slack for comparisons between variance values.
EPSILON = 1e-12


def validate_holder_parameters(band):
    """Validates that the Hölder data is C > 0 and 0 < alpha <= 1."""
    if not band.holder_C > 0:
        raise ValidationError(_("Hölder constant C must be positive."), code='holder-constant')
    if not 0 < band.holder_alpha <= 1:
        raise ValidationError(_("Hölder exponent alpha must lie in (0, 1]."), code='holder-exponent')


def validate_knot_times(band):
    """
    Validates that both knot tables start at time 0, end at the horizon
    and are strictly increasing in time.
    """
    for name, times in (('lower', band.lower_times), ('upper', band.upper_times)):
        if len(times) < 2:
            raise ValidationError(
                format_lazy(_("The {name} distribution needs at least two knots."), name=name),
                code='knot-times')
        if times[0] != 0 or not np.isclose(times[-1], band.horizon, rtol=0, atol=EPSILON):
            raise ValidationError(
                format_lazy(_("The {name} knots must start at time 0 and end at the horizon T."), name=name),
                code='knot-times')
        if np.any(np.diff(times) <= 0):
            raise ValidationError(
                format_lazy(_("The {name} knot times must be strictly increasing."), name=name),
                code='knot-times')


def validate_starts_at_zero(band):
    """Validates that both distributions vanish at time 0."""
    if band.lower_values[0] != 0 or band.upper_values[0] != 0:
        raise ValidationError(_("Both distributions must start at 0."), code='origin')


def validate_monotonicity(band):
    """Validates that both distributions are nondecreasing."""
    for name, values in (('lower', band.lower_values), ('upper', band.upper_values)):
        if np.any(np.diff(values) < -EPSILON):
            raise ValidationError(
                format_lazy(_("Monotonicity: the {name} distribution decreases on some interval."), name=name),
                code='monotonicity')


def validate_increment_dominance(band):
    """
    Validates that the lower distribution never grows faster than the upper
    one, on every interval of the merged knot grid.
    """
    times = band.merged_times
    lower = np.diff(band.lower(times))
    upper = np.diff(band.upper(times))
    violations = np.flatnonzero(lower - upper > EPSILON)
    if violations.size:
        i = violations[0]
        raise ValidationError(
            format_lazy(
                _("Increment dominance: on [{s:g}, {t:g}] the lower increment exceeds the upper one."),
                s=times[i], t=times[i + 1]),
            code='dominance')


def validate_holder_bound(band):
    """
    Validates the Hölder bound of the upper distribution over every pair of
    its knot times.
    """
    if not band.holder_C > 0 or not 0 < band.holder_alpha <= 1:
        return
    times, values = band.upper_times, band.upper_values
    ds = times[None, :] - times[:, None]
    dv = values[None, :] - values[:, None]
    later = ds > 0
    bound = band.holder_C * np.where(later, ds, 0) ** band.holder_alpha
    excess = np.where(later, dv - bound, -np.inf)
    if np.any(excess > EPSILON):
        i, j = np.unravel_index(np.argmax(excess), excess.shape)
        raise ValidationError(
            format_lazy(
                _("Hölder: the upper increment on [{s:g}, {t:g}] exceeds C·(t − s)^alpha."),
                s=times[i], t=times[j]),
            code='holder')


def validate_nonzero(band):
    """Validates that the upper measure is not zero."""
    if not band.upper_values[-1] > 0:
        raise ValidationError(_("The upper measure must be nonzero (μ̄_T > 0)."), code='degenerate-band')


BAND_VALIDATORS = (
    validate_holder_parameters,
    validate_knot_times,
    validate_starts_at_zero,
    validate_monotonicity,
    validate_increment_dominance,
    validate_holder_bound,
    validate_nonzero,
)
