"""
Realized quadratic variation of sampled paths, its containment in the band
and the convergence of coarse sums of squared increments to the fine-grid
bracket.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from core.payoffs import locate_dates
from core.utils import loglog_slope, mean_and_se

from .ensembles import band_steps, sample_paths
from .schemes import IncrementLaw, default_battery

simulate_log = logging.getLogger('SuperHedge.simulate')


@dataclass(frozen=True, eq=False)
class QVCurve:
    times: np.ndarray
    values: np.ndarray

    @property
    def terminal(self):
        return float(self.values[-1])


def realized_qv_matrix(ensemble):
    """Cumulative sums of squared increments per path and knot, starting at 0."""
    squares = np.square(ensemble.increments)
    return np.concatenate([np.zeros((ensemble.n_paths, 1)), np.cumsum(squares, axis=1)], axis=1)


def realized_qv(ensemble, path_index):
    increments = np.diff(ensemble.B[path_index])
    return QVCurve(times=ensemble.time_knots, values=np.concatenate([[0.0], np.cumsum(increments ** 2)]))


def variance_containment(ensemble, band):
    """Number of chosen step variances outside [v̲_i, v̄_i]."""
    v_low, v_high = band_steps(band, ensemble.time_knots)
    slack = 1e-12 * max(float(v_high.max()), 1.0)
    return int(np.count_nonzero((ensemble.v < v_low - slack) | (ensemble.v > v_high + slack)))


def qv_containment(ensemble, band, rtol=1e-9):
    """
    Counts the (path, knot) pairs at which the realized bracket leaves
    [μ̲_t, μ̄_t]. Exact for Binomial ensembles, where (ΔB)² = v on every step.
    """
    qv = realized_qv_matrix(ensemble)
    lower = band.lower(ensemble.time_knots)[None, :]
    upper = band.upper(ensemble.time_knots)[None, :]
    slack = rtol * band.total_upper
    below = int(np.count_nonzero(qv < lower - slack))
    above = int(np.count_nonzero(qv > upper + slack))
    return {'checked': int(qv.size), 'below': below, 'above': above, 'violations': below + above}


@dataclass
class QVApproxEstimate:
    subdivisions: int
    t: float
    value: float
    stderr: float
    bound: float
    per_scheme: dict = field(default_factory=dict)

    @property
    def within_bound(self):
        return self.value <= self.bound + settings.DUALITY_SE_MULTIPLIER * self.stderr

    def as_dict(self):
        return {
            'subdivisions': self.subdivisions, 't': self.t, 'value': self.value, 'stderr': self.stderr,
            'bound': self.bound, 'within_bound': self.within_bound,
            'per_scheme': {name: {'mean': m, 'stderr': s} for name, (m, s) in self.per_scheme.items()},
        }


def _qv_estimates(band, t, subdivisions, n_paths, seed, law, battery, fine_steps):
    fine_steps = fine_steps or settings.SIMULATION_FINE_STEPS
    if not 0 < t <= band.horizon:
        raise ValidationError(_("The time t must lie in (0, T]."), code='range')
    for n in subdivisions:
        if n < 1 or n > fine_steps or fine_steps % n:
            raise ValidationError(
                format_lazy(_("{n} subdivisions do not divide the fine grid of {fine} steps."),
                            n=n, fine=fine_steps),
                code='resolution')
    knots = np.linspace(0.0, t, fine_steps + 1)
    battery = battery if battery is not None else default_battery(band, law)
    per_scheme = {n: {} for n in subdivisions}
    for scheme in battery:
        ensemble = sample_paths(band, scheme, n_paths, fine_steps, seed, time_knots=knots)
        bracket = np.square(ensemble.increments).sum(axis=1)
        for n in subdivisions:
            coarse = np.square(np.diff(ensemble.B[:, ::fine_steps // n], axis=1)).sum(axis=1)
            per_scheme[n][scheme.name] = mean_and_se((coarse - bracket) ** 2)
    estimates = []
    for n in subdivisions:
        name = max(per_scheme[n], key=lambda key: per_scheme[n][key][0])
        value, stderr = per_scheme[n][name]
        bound = 4 * band.holder_C * (t / n) ** band.holder_alpha * float(band.upper(t))
        simulate_log.debug("QV error at n=%d: %.6g (bound %.6g)", n, value, bound)
        estimates.append(QVApproxEstimate(
            subdivisions=n, t=float(t), value=value, stderr=stderr, bound=bound, per_scheme=per_scheme[n]))
    return estimates


def qv_approx_error(band, t, subdivisions, n_paths, seed, law=IncrementLaw.GAUSSIAN, battery=None,
                    fine_steps=None):
    """
    Sup over the battery of E(S_t^n − ⟨B⟩_t)², S_t^n summing squared
    increments over n equal subintervals of [0, t] and ⟨B⟩_t the realized
    bracket of the fine equal-time grid. Also returns 4C(t/n)^α μ̄_t.
    """
    return _qv_estimates(band, t, [subdivisions], n_paths, seed, law, battery, fine_steps)[0]


@dataclass
class QVSweep:
    estimates: list
    slope: float
    slope_stderr: float

    @property
    def all_within_bound(self):
        return all(estimate.within_bound for estimate in self.estimates)

    def as_dict(self):
        return {
            'estimates': [estimate.as_dict() for estimate in self.estimates],
            'slope': None if np.isnan(self.slope) else self.slope,
            'slope_stderr': None if np.isnan(self.slope_stderr) else self.slope_stderr,
            'all_within_bound': self.all_within_bound,
        }


def qv_sweep(band, t, subdivisions, n_paths, seed, law=IncrementLaw.GAUSSIAN, battery=None, fine_steps=None):
    """The approximation error over several subdivisions, with its fitted log-log slope (about −α)."""
    estimates = _qv_estimates(band, t, list(subdivisions), n_paths, seed, law, battery, fine_steps)
    slope, stderr = loglog_slope([e.subdivisions for e in estimates], [e.value for e in estimates])
    return QVSweep(estimates=estimates, slope=slope, slope_stderr=stderr)


@dataclass
class MomentEstimate:
    order: int
    s: float
    t: float
    value: float
    stderr: float


def moment_estimate(ensemble, n, s, t):
    """Monte Carlo estimate of E(B_t − B_s)^{2n} with its standard error, s and t being knots."""
    if n not in (1, 2, 3):
        raise ValidationError(_("Moments of order 2, 4 and 6 are supported (n in 1, 2, 3)."), code='range')
    if s > t:
        raise ValidationError(_("The interval needs s <= t."), code='range')
    if s == t:
        return MomentEstimate(order=n, s=s, t=t, value=0.0, stderr=0.0)
    k_s, k_t = locate_dates(ensemble.time_knots, (s, t))
    samples = (ensemble.B[:, k_t] - ensemble.B[:, k_s]) ** (2 * n)
    value, stderr = mean_and_se(samples)
    return MomentEstimate(order=n, s=s, t=t, value=value, stderr=stderr)
