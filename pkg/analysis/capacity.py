"""
The capacity c(f) = sup_P ‖f‖_{L²(P)} over the battery, and sampled checks
of its axioms on exceedance events.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from core.expressions import Max
from core.payoffs import evaluate_paths, exceedance, same_functional
from core.utils import mean_and_se
from simulate.ensembles import sample_paths
from simulate.integrals import holdings, path_integrals

from .duality import DualEstimate

analysis_log = logging.getLogger('SuperHedge.analysis')


@dataclass
class CapacityEstimate:
    value: float
    stderr: float
    best_scheme: str
    per_scheme: list = field(default_factory=list)

    def as_dict(self):
        return {
            'value': self.value,
            'stderr': self.stderr,
            'best_scheme': self.best_scheme,
            'per_scheme': [
                {'scheme': norm.scheme, 'norm': norm.mean, 'stderr': norm.stderr} for norm in self.per_scheme
            ],
        }


def _l2_norm(samples):
    second, stderr = mean_and_se(np.square(samples))
    norm = float(np.sqrt(second))
    # delta method for the square root
    return norm, stderr / (2 * norm) if norm > 0 else 0.0


def sample_battery(band, battery, n_paths, n_steps, seed):
    """One ensemble per scheme, all from the same seed."""
    if not battery:
        raise ValidationError(_("The scheme battery is empty."), code='battery')
    return [sample_paths(band, scheme, n_paths, n_steps, seed) for scheme in battery]


def capacity_from_samples(payoff, ensembles):
    norms = []
    for ensemble in ensembles:
        norm, stderr = _l2_norm(evaluate_paths(payoff, ensemble.time_knots, ensemble.B))
        norms.append(DualEstimate(scheme=ensemble.scheme, mean=norm, stderr=stderr, n_paths=ensemble.n_paths))
    best = max(norms, key=lambda norm: norm.mean)
    return CapacityEstimate(value=best.mean, stderr=best.stderr, best_scheme=best.scheme, per_scheme=norms)


def capacity(payoff, band, battery, n_paths, n_steps, seed, ensembles=None):
    """Max over the battery of the sampled L² norm of the claim."""
    ensembles = ensembles or sample_battery(band, battery, n_paths, n_steps, seed)
    estimate = capacity_from_samples(payoff, ensembles)
    analysis_log.debug("Capacity %.6g attained by %s", estimate.value, estimate.best_scheme)
    return estimate


@dataclass
class MarkovCheck:
    alpha: float
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float

    @property
    def passed(self):
        k = settings.DUALITY_SE_MULTIPLIER
        return self.lhs <= self.rhs + k * (self.lhs_stderr + self.rhs_stderr)

    def as_dict(self):
        return {
            'alpha': self.alpha, 'lhs': self.lhs, 'lhs_stderr': self.lhs_stderr,
            'rhs': self.rhs, 'rhs_stderr': self.rhs_stderr, 'passed': self.passed,
        }


def markov_check(payoff, alpha, band, battery, n_paths, n_steps, seed, ensembles=None):
    """c({|f| > alpha}) against c(f) / alpha on the same paths."""
    ensembles = ensembles or sample_battery(band, battery, n_paths, n_steps, seed)
    event = capacity_from_samples(exceedance(payoff, alpha), ensembles)
    norm = capacity_from_samples(payoff, ensembles)
    return MarkovCheck(
        alpha=float(alpha), lhs=event.value, lhs_stderr=event.stderr,
        rhs=norm.value / alpha, rhs_stderr=norm.stderr / alpha)


def union_event(first, second):
    """The indicator of the union of two events on the same path functional."""
    if not same_functional(first, second):
        raise ValidationError(_("Only events on the same path functional can be joined."), code='shape')
    return first.with_outer(Max(first.outer, second.outer))


def capacity_axiom_check(pairs, band, battery, n_paths, n_steps, seed, ensembles=None):
    """
    For each pair (A, B) of indicator claims with A contained in B: the
    monotonicity c(A) <= c(B) and the subadditivity c(A ∪ B) <= c(A) + c(B),
    each within DUALITY_SE_MULTIPLIER standard errors.
    """
    ensembles = ensembles or sample_battery(band, battery, n_paths, n_steps, seed)
    k = settings.DUALITY_SE_MULTIPLIER
    checks = []
    for first, second in pairs:
        c_a = capacity_from_samples(first, ensembles)
        c_b = capacity_from_samples(second, ensembles)
        c_union = capacity_from_samples(union_event(first, second), ensembles)
        checks.append({
            'c_a': c_a.value,
            'c_b': c_b.value,
            'c_union': c_union.value,
            'monotone': c_a.value <= c_b.value + k * (c_a.stderr + c_b.stderr),
            'subadditive': c_union.value <= c_a.value + c_b.value + k * (c_union.stderr + c_a.stderr + c_b.stderr),
        })
    return {'pairs': checks, 'passed': all(check['monotone'] and check['subadditive'] for check in checks)}


@dataclass
class IntegralBound:
    lhs: float
    lhs_stderr: float
    rhs: float
    rhs_stderr: float

    @property
    def passed(self):
        return self.lhs <= self.rhs + settings.DUALITY_SE_MULTIPLIER * (self.lhs_stderr + self.rhs_stderr)

    def as_dict(self):
        return {
            'lhs': self.lhs, 'lhs_stderr': self.lhs_stderr,
            'rhs': self.rhs, 'rhs_stderr': self.rhs_stderr, 'passed': self.passed,
        }


def integral_bound_check(strategy, ensembles):
    """
    c(I_T(h)) against ‖h‖_H, the square root of sup_P E_P Σ h_i² Δμ̄_i with
    Δμ̄_i the upper band increments of the strategy's grid.
    """
    lhs = rhs = (0.0, 0.0)
    for ensemble in ensembles:
        integral = _l2_norm(path_integrals(strategy, ensemble)[:, -1])
        weighted = _l2_norm(np.sqrt(np.square(holdings(strategy, ensemble)) @ strategy.spec.v_high))
        lhs, rhs = max(lhs, integral), max(rhs, weighted)
    return IntegralBound(lhs=lhs[0], lhs_stderr=lhs[1], rhs=rhs[0], rhs_stderr=rhs[1])
