"""
Measure schemes: finite stand-ins for the family of martingale measures
whose per-step variances lie in the band.

A scheme picks the variance of every step of every path; the increment law
then draws a centered increment of that variance.
"""
from dataclasses import dataclass
from enum import Enum

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

# Relative slack when checking a requested variance against the band.
BAND_TOLERANCE = 1e-9


class IncrementLaw(Enum):
    GAUSSIAN = 'gaussian'
    BINOMIAL = 'binomial'
    TRINOMIAL = 'trinomial'

    def __str__(self):
        return self.value


def draw_increments(law, variance, rng, dx=None):
    """
    Centered increments of the given per-path variances: √v·Z, ±√v with
    equal probability, or ±dx with probability v/(2dx²) each and 0 otherwise.
    """
    law = IncrementLaw(law)
    if law is IncrementLaw.GAUSSIAN:
        return np.sqrt(variance) * rng.standard_normal(variance.shape)
    if law is IncrementLaw.BINOMIAL:
        return np.sqrt(variance) * np.where(rng.random(variance.shape) < 0.5, 1.0, -1.0)
    u = rng.random(variance.shape)
    p = variance / (2 * dx ** 2)
    return np.where(u < p, dx, np.where(u < 2 * p, -dx, 0.0))


def _check_inside(requested, v_low, v_high, what):
    slack = BAND_TOLERANCE * np.maximum(v_high, 1e-300)
    outside = np.flatnonzero((requested < v_low - slack) | (requested > v_high + slack))
    if outside.size:
        i = outside[0]
        raise ValidationError(
            format_lazy(
                _("{what} asks for variance {v:.6g} on step {i}, outside the band [{lo:.6g}, {hi:.6g}]."),
                what=what, v=requested[i], i=i, lo=v_low[i], hi=v_high[i]),
            code='band-violation')


class MeasureScheme(object):
    """
    Base of the schemes. `start` validates the scheme against the grid and
    draws whatever the scheme randomizes once per path; `variance` gives the
    variances of step i for all paths.
    """
    tag = None
    law = IncrementLaw.GAUSSIAN

    def start(self, v_low, v_high, time_steps, n_paths, rng):
        return {}

    def variance(self, i, context, x, v_low, v_high):
        raise NotImplementedError

    def advance(self, context, x_prev, x_new, i):
        pass

    @property
    def name(self):
        return self.tag

    def as_dict(self):
        return {'tag': self.tag, 'name': self.name, 'law': str(self.law)}


@dataclass(frozen=True)
class ConstVol(MeasureScheme):
    sigma: float
    law: IncrementLaw = IncrementLaw.GAUSSIAN

    tag = 'ConstVol'

    def start(self, v_low, v_high, time_steps, n_paths, rng):
        requested = self.sigma ** 2 * time_steps
        _check_inside(requested, v_low, v_high, self.name)
        return {'variances': np.clip(requested, v_low, v_high)}

    def variance(self, i, context, x, v_low, v_high):
        return np.full(x.shape, context['variances'][i])

    @property
    def name(self):
        return 'ConstVol(sigma={:g})'.format(self.sigma)


@dataclass(frozen=True)
class DeterministicProfile(MeasureScheme):
    """
    Variances fixed in advance, either one per step or as the band point
    v̲_i + weight·(v̄_i − v̲_i) on every step.
    """
    variances: tuple = None
    weight: float = None
    law: IncrementLaw = IncrementLaw.GAUSSIAN

    tag = 'DeterministicProfile'

    def __post_init__(self):
        if (self.variances is None) == (self.weight is None):
            raise ValidationError(_("A profile takes either variances or a band weight."), code='battery')
        if self.weight is not None and not 0 <= self.weight <= 1:
            raise ValidationError(_("The band weight must lie in [0, 1]."), code='range')

    def start(self, v_low, v_high, time_steps, n_paths, rng):
        if self.weight is not None:
            return {'variances': v_low + self.weight * (v_high - v_low)}
        requested = np.asarray(self.variances, dtype=float)
        if requested.shape != v_low.shape:
            raise ValidationError(
                format_lazy(_("The profile has {k} variances for {n} steps."), k=requested.size, n=v_low.size),
                code='shape')
        _check_inside(requested, v_low, v_high, self.name)
        return {'variances': np.clip(requested, v_low, v_high)}

    def variance(self, i, context, x, v_low, v_high):
        return np.full(x.shape, context['variances'][i])

    @property
    def name(self):
        if self.weight is not None:
            return 'DeterministicProfile(weight={:g})'.format(self.weight)
        return 'DeterministicProfile({} steps)'.format(len(self.variances))


@dataclass(frozen=True)
class PiecewiseRandom(MeasureScheme):
    """
    The steps are cut into n_regimes consecutive blocks; on each block every
    path independently takes v̄ with probability p_high and v̲ otherwise.
    """
    n_regimes: int
    p_high: float = 0.5
    law: IncrementLaw = IncrementLaw.GAUSSIAN

    tag = 'PiecewiseRandom'

    def __post_init__(self):
        if self.n_regimes < 1 or not 0 <= self.p_high <= 1:
            raise ValidationError(_("Regimes need n_regimes >= 1 and p_high in [0, 1]."), code='range')

    def start(self, v_low, v_high, time_steps, n_paths, rng):
        blocks = np.array_split(np.arange(v_low.size), min(self.n_regimes, v_low.size))
        regime_of_step = np.empty(v_low.size, dtype=int)
        for r, steps in enumerate(blocks):
            regime_of_step[steps] = r
        return {'regime_of_step': regime_of_step, 'high': rng.random((n_paths, len(blocks))) < self.p_high}

    def variance(self, i, context, x, v_low, v_high):
        return np.where(context['high'][:, context['regime_of_step'][i]], v_high[i], v_low[i])

    @property
    def name(self):
        return 'PiecewiseRandom(n_regimes={}, p_high={:g})'.format(self.n_regimes, self.p_high)


@dataclass(frozen=True, eq=False)
class PolicyFeedback(MeasureScheme):
    """The variance recorded by a lattice policy at the nearest node of the path's state."""
    policy: object
    spec: object
    law: IncrementLaw = IncrementLaw.TRINOMIAL

    tag = 'PolicyFeedback'

    def start(self, v_low, v_high, time_steps, n_paths, rng):
        knots = self.spec.time_knots
        if v_low.size != self.spec.n_steps or not np.allclose(time_steps, np.diff(knots), rtol=0, atol=1e-12):
            raise ValidationError(
                format_lazy(_("The policy has {n} steps but {k} steps are simulated."),
                            n=self.spec.n_steps, k=v_low.size),
                code='shape')
        return {'state': self.policy.aux.initial_state(n_paths)}

    def variance(self, i, context, x, v_low, v_high):
        return self.policy.variance_at(i, x, context['state'])

    def advance(self, context, x_prev, x_new, i):
        context['state'] = self.policy.aux.advance(context['state'], x_prev, x_new, i)

    @property
    def name(self):
        return 'PolicyFeedback({})'.format(self.policy.side)


def default_battery(band, law=IncrementLaw.BINOMIAL, policy=None, spec=None):
    """
    The fixed family standing in for all admissible measures: both band
    endpoints and their midpoint, three random regime schemes and, given a
    policy, the policy-induced measure on the lattice grid.
    """
    law = IncrementLaw(law)
    if band.sigma_pair:
        sigma_low, sigma_high = band.sigma_pair
        battery = [ConstVol(sigma_low, law), ConstVol(sigma_high, law), ConstVol(0.5 * (sigma_low + sigma_high), law)]
    else:
        battery = [DeterministicProfile(weight=w, law=law) for w in (0.0, 1.0, 0.5)]
    battery += [
        PiecewiseRandom(2, 0.5, law),
        PiecewiseRandom(4, 0.3, law),
        PiecewiseRandom(8, 0.7, law),
    ]
    if policy is not None:
        battery.append(PolicyFeedback(policy, spec or policy.spec))
    return battery
