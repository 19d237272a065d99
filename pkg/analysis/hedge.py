"""
Pathwise audit of a funded hedge: the capital a plus the discrete
stochastic integral of the strategy against the claim, on every sampled
path of every ensemble.
"""
import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from core.payoffs import evaluate_paths
from simulate.integrals import path_integrals

analysis_log = logging.getLogger('SuperHedge.analysis')

HISTOGRAM_COLUMNS = ('lower', 'upper', 'count')


def default_tolerance(spec):
    """HEDGE_TOLERANCE_DX2 lattice cells of dx²."""
    return settings.HEDGE_TOLERANCE_DX2 * spec.dx ** 2


@dataclass(eq=False)
class HedgeReport:
    initial_capital: float
    tolerance: float
    terminal_values: np.ndarray
    shortfalls: np.ndarray
    running_floor: float
    per_scheme: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return int(self.shortfalls.size)

    @property
    def violations(self):
        return int(np.count_nonzero(self.shortfalls > self.tolerance))

    @property
    def violation_rate(self):
        return self.violations / self.n_paths if self.n_paths else 0.0

    @property
    def max_shortfall(self):
        return float(self.shortfalls.max()) if self.n_paths else 0.0

    def as_dict(self):
        return {
            'initial_capital': self.initial_capital,
            'tolerance': self.tolerance,
            'paths': self.n_paths,
            'violations': self.violations,
            'violation_rate': self.violation_rate,
            'max_shortfall': self.max_shortfall,
            'mean_shortfall': float(self.shortfalls.mean()) if self.n_paths else 0.0,
            'running_floor': self.running_floor,
            'per_scheme': self.per_scheme,
        }


def verify_superhedge(a, strategy, ensembles, payoff, eps=None):
    """
    Counts the paths on which f - (a + I_T(h)) exceeds eps, pooled over the
    ensembles and per ensemble. eps defaults to HEDGE_TOLERANCE_DX2 · dx².
    """
    eps = default_tolerance(strategy.spec) if eps is None else float(eps)
    if eps < 0:
        raise ValidationError(_("The hedge tolerance must be nonnegative."), code='tolerance')
    if not ensembles:
        raise ValidationError(_("At least one ensemble is needed to audit a hedge."), code='battery')
    terminal, shortfalls, floors, per_scheme = [], [], [], {}
    for ensemble in ensembles:
        wealth = a + path_integrals(strategy, ensemble)
        claim = evaluate_paths(payoff, ensemble.time_knots, ensemble.B)
        shortfall = np.maximum(claim - wealth[:, -1], 0.0)
        terminal.append(wealth[:, -1])
        shortfalls.append(shortfall)
        floors.append(float(wealth.min()))
        violations = int(np.count_nonzero(shortfall > eps))
        per_scheme[ensemble.scheme] = {
            'paths': ensemble.n_paths,
            'violations': violations,
            'violation_rate': violations / ensemble.n_paths,
            'max_shortfall': float(shortfall.max()),
        }
    report = HedgeReport(
        initial_capital=float(a), tolerance=eps, terminal_values=np.concatenate(terminal),
        shortfalls=np.concatenate(shortfalls), running_floor=min(floors), per_scheme=per_scheme)
    analysis_log.info(
        "Hedge audit with a=%.6g: %d of %d paths short by more than %.3g (max %.3g)",
        report.initial_capital, report.violations, report.n_paths, eps, report.max_shortfall)
    return report


def shortfall_histogram(report, bins=20):
    """Counts of the shortfalls over equal bins of [0, max(max_shortfall, eps)]."""
    top = max(report.max_shortfall, report.tolerance) or 1.0
    counts, edges = np.histogram(report.shortfalls, bins=bins, range=(0.0, top))
    return [
        {'lower': float(lo), 'upper': float(hi), 'count': int(count)}
        for lo, hi, count in zip(edges[:-1], edges[1:], counts)
    ]


def histogram_to_csv(histogram, stream):
    writer = csv.DictWriter(stream, fieldnames=HISTOGRAM_COLUMNS, lineterminator='\n')
    writer.writeheader()
    for row in histogram:
        writer.writerow({'lower': repr(row['lower']), 'upper': repr(row['upper']), 'count': row['count']})
    return len(histogram)
