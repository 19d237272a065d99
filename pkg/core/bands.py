"""
Measure bands: the pair of increasing distributions (μ̲, μ̄) which bound the
quadratic variation of the canonical process under every admissible
martingale measure, together with the Hölder data (C, alpha) of μ̄.

Both distributions are piecewise linear between their knots.
"""
import csv
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from .validators import BAND_VALIDATORS, EPSILON

band_log = logging.getLogger('SuperHedge.bands')


@dataclass(frozen=True, eq=False)
class MeasureBand:
    horizon: float
    lower_knots: tuple
    upper_knots: tuple
    holder_C: float
    holder_alpha: float
    # Set only for bands built from a volatility pair.
    sigma_pair: tuple = None

    @cached_property
    def lower_times(self):
        return np.array([t for t, value in self.lower_knots], dtype=float)

    @cached_property
    def lower_values(self):
        return np.array([value for t, value in self.lower_knots], dtype=float)

    @cached_property
    def upper_times(self):
        return np.array([t for t, value in self.upper_knots], dtype=float)

    @cached_property
    def upper_values(self):
        return np.array([value for t, value in self.upper_knots], dtype=float)

    @cached_property
    def merged_times(self):
        return np.union1d(self.lower_times, self.upper_times)

    @property
    def total_lower(self):
        return float(self.lower_values[-1])

    @property
    def total_upper(self):
        return float(self.upper_values[-1])

    @property
    def is_degenerate(self):
        """True when μ̲ = μ̄, that is, the family holds a single law (complete market)."""
        times = self.merged_times
        return bool(np.allclose(self.lower(times), self.upper(times), rtol=0, atol=EPSILON))

    def lower(self, t):
        return np.interp(t, self.lower_times, self.lower_values)

    def upper(self, t):
        return np.interp(t, self.upper_times, self.upper_values)

    def upper_inverse(self, level):
        """
        Smallest time at which μ̄ reaches `level`, for 0 < level <= μ̄_T.
        """
        values, times = self.upper_values, self.upper_times
        k = int(np.searchsorted(values, level, side='left'))
        k = min(max(k, 1), len(values) - 1)
        span = values[k] - values[k - 1]
        if span <= 0:
            return float(times[k])
        return float(times[k - 1] + (level - values[k - 1]) / span * (times[k] - times[k - 1]))

    def describe(self):
        if self.sigma_pair:
            return "vol band σ̲={:g}, σ̄={:g}, T={:g}".format(*self.sigma_pair, self.horizon)
        return "knot band μ̲_T={:g}, μ̄_T={:g}, T={:g}".format(self.total_lower, self.total_upper, self.horizon)

    def as_dict(self):
        return {
            'horizon': self.horizon,
            'lower_knots': [list(knot) for knot in self.lower_knots],
            'upper_knots': [list(knot) for knot in self.upper_knots],
            'holder_C': self.holder_C,
            'holder_alpha': self.holder_alpha,
            'sigma_pair': list(self.sigma_pair) if self.sigma_pair else None,
        }


def make_vol_band(sigma_low, sigma_high, T):
    """
    The uncertain volatility band: dμ̲ = σ̲² dt and dμ̄ = σ̄² dt.
    """
    if not T > 0:
        raise ValidationError(_("The horizon T must be positive."), code='horizon')
    if sigma_low < 0:
        raise ValidationError(_("sigma_low must be nonnegative."), code='ordering')
    if sigma_low > sigma_high:
        raise ValidationError(_("sigma_low > sigma_high"), code='ordering')
    if not sigma_high > 0:
        raise ValidationError(_("sigma_high must be positive."), code='ordering')
    low, high = float(sigma_low) ** 2, float(sigma_high) ** 2
    return MeasureBand(
        horizon=float(T),
        lower_knots=((0.0, 0.0), (float(T), low * T)),
        upper_knots=((0.0, 0.0), (float(T), high * T)),
        holder_C=high,
        holder_alpha=1.0,
        sigma_pair=(float(sigma_low), float(sigma_high)),
    )


def holder_constant(upper_knots, alpha=1.0):
    """
    Smallest C such that μ̄_t − μ̄_s <= C·(t − s)^alpha over every pair of knots.
    """
    times = np.array([t for t, value in upper_knots], dtype=float)
    values = np.array([value for t, value in upper_knots], dtype=float)
    ds = times[None, :] - times[:, None]
    later = ds > 0
    ratios = np.where(later, (values[None, :] - values[:, None]) / np.where(later, ds, 1) ** alpha, 0)
    return float(ratios.max())


def make_knot_band(lower_knots, upper_knots, holder_C=None, holder_alpha=1.0):
    """
    A general band from knot tables of (t, value) pairs. Raises a
    ValidationError listing every violated constraint.
    """
    lower_knots = tuple((float(t), float(v)) for t, v in lower_knots)
    upper_knots = tuple((float(t), float(v)) for t, v in upper_knots)
    if not upper_knots or not lower_knots:
        raise ValidationError(_("Both knot tables are required."), code='knot-times')
    if holder_C is None:
        holder_C = holder_constant(upper_knots, holder_alpha) or 1.0
    band = MeasureBand(
        horizon=upper_knots[-1][0],
        lower_knots=lower_knots,
        upper_knots=upper_knots,
        holder_C=float(holder_C),
        holder_alpha=float(holder_alpha),
    )
    report = validate_band(band)
    if report:
        raise ValidationError(report)
    return band


def validate_band(band):
    """
    Lists every violated invariant of the band; the list is empty if and only
    if the band is valid.
    """
    report = []
    for validator in BAND_VALIDATORS:
        try:
            validator(band)
        except ValidationError as error:
            report.append(error)
    return report


def band_increment(band, s, t):
    """The pair (Δμ̲, Δμ̄) over the interval [s, t]."""
    if not 0 <= s <= t <= band.horizon + EPSILON:
        raise ValidationError(
            format_lazy(_("Times must satisfy 0 <= s <= t <= T; got s={s}, t={t}."), s=s, t=t),
            code='range')
    if s == t:
        return 0.0, 0.0
    return float(band.lower(t) - band.lower(s)), float(band.upper(t) - band.upper(s))


def equal_variance_knots(band, n_steps):
    """
    Time knots 0 = t_0 < ... < t_n = T at which μ̄ has equal increments
    μ̄_T / n.
    """
    if n_steps < 1:
        raise ValidationError(_("The number of steps must be at least 1."), code='range')
    total = band.total_upper
    if not total > 0:
        raise ValidationError(_("The upper measure is zero; the band is degenerate."), code='degenerate-band')
    levels = total * np.arange(1, n_steps) / n_steps
    inner = [band.upper_inverse(level) for level in levels]
    knots = np.array([0.0] + inner + [band.horizon])
    band_log.debug("Equal-variance grid of %d steps for %s", n_steps, band.describe())
    return knots


def read_knot_table(file_name):
    """
    Reads a CSV knot table with the columns `t`, `lower` and `upper`
    (variance units) and returns the pair of knot sequences.
    """
    with open(file_name, 'r', newline='') as csvfile:
        reader = csv.DictReader(csvfile)
        try:
            rows = [(float(row['t']), float(row['lower']), float(row['upper'])) for row in reader]
        except KeyError:
            raise ValidationError(
                _("The knot table must have 't', 'lower' and 'upper' column headers."), code='knot-table')
        except ValueError as err:
            raise ValidationError(
                format_lazy(_("The knot table holds a non-numeric value: {err}"), err=err), code='knot-table')
    return [(t, lower) for t, lower, upper in rows], [(t, upper) for t, lower, upper in rows]
