"""
The dual side of the superreplication price: Monte Carlo expectations of the
claim under the measures of a battery, and the gap to the lattice price.
"""
import logging
from dataclasses import dataclass, field

from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from core.payoffs import evaluate_paths
from core.utils import mean_and_se
from simulate.ensembles import sample_paths

analysis_log = logging.getLogger('SuperHedge.analysis')


class InconsistentDuality(Exception):
    """A dual estimate lies above the primal price by more than the noise allows."""

    def __init__(self, report):
        self.report = report
        super().__init__(format_lazy(
            _("Dual estimate {dual:.6g} of {scheme} exceeds the primal price {primal:.6g} "
              "beyond {k} standard errors and the truncation allowance."),
            dual=report.best_dual, scheme=report.best_scheme, primal=report.primal,
            k=settings.DUALITY_SE_MULTIPLIER))


@dataclass(frozen=True)
class DualEstimate:
    scheme: str
    mean: float
    stderr: float
    n_paths: int
    generator: str = ''

    def as_dict(self):
        return {'scheme': self.scheme, 'mean': self.mean, 'stderr': self.stderr, 'paths': self.n_paths}


def dual_bound(payoff, band, battery, n_paths, n_steps, seed, ensembles=None):
    """
    E_P f with its standard error for every scheme of the battery, all
    schemes sampled from the same seed. Precomputed ensembles, one per
    scheme, are used when given.
    """
    if not battery:
        raise ValidationError(_("The scheme battery is empty."), code='battery')
    estimates = []
    for k, scheme in enumerate(battery):
        if ensembles is not None:
            ensemble = ensembles[k]
        else:
            ensemble = sample_paths(band, scheme, n_paths, n_steps, seed)
        mean, stderr = mean_and_se(evaluate_paths(payoff, ensemble.time_knots, ensemble.B))
        analysis_log.debug("Dual estimate under %s: %.6g +- %.2g", scheme.name, mean, stderr)
        estimates.append(DualEstimate(
            scheme=scheme.name, mean=mean, stderr=stderr, n_paths=ensemble.n_paths,
            generator=ensemble.generator))
    return estimates


@dataclass
class DualityReport:
    primal: float
    estimates: list
    best_scheme: str
    best_dual: float
    best_stderr: float
    allowance: float
    violations: list = field(default_factory=list)

    @property
    def gap(self):
        return self.primal - self.best_dual

    @property
    def gap_relative(self):
        scale = max(abs(self.primal), abs(self.best_dual))
        return self.gap / scale if scale else 0.0

    @property
    def is_consistent(self):
        return not self.violations

    def as_dict(self):
        return {
            'primal': self.primal,
            'estimates': [estimate.as_dict() for estimate in self.estimates],
            'best_scheme': self.best_scheme,
            'best_dual': self.best_dual,
            'best_stderr': self.best_stderr,
            'gap': self.gap,
            'gap_relative': self.gap_relative,
            'allowance': self.allowance,
            'consistent': self.is_consistent,
            'violations': self.violations,
        }


def duality_gap(primal, estimates, allowance=None):
    """
    Gap between the lattice price and the best dual estimate (ties go to
    the first scheme). Schemes whose estimate exceeds the price by more than
    DUALITY_SE_MULTIPLIER standard errors plus the truncation allowance
    (relative to |primal|) are listed as violations.
    """
    if not estimates:
        raise ValidationError(_("No dual estimates to compare with."), code='battery')
    relative = settings.DUALITY_TRUNCATION_ALLOWANCE if allowance is None else float(allowance)
    slack = relative * abs(primal)
    best = max(estimates, key=lambda estimate: estimate.mean)
    k = settings.DUALITY_SE_MULTIPLIER
    violations = [
        estimate.scheme for estimate in estimates if estimate.mean > primal + k * estimate.stderr + slack
    ]
    report = DualityReport(
        primal=float(primal), estimates=list(estimates), best_scheme=best.scheme, best_dual=best.mean,
        best_stderr=best.stderr, allowance=slack, violations=violations)
    if violations:
        analysis_log.warning("Weak duality fails for %s (primal %.6g)", ', '.join(violations), primal)
    else:
        analysis_log.info(
            "Duality gap %.3g (%.2f%%) against %s", report.gap, 100 * report.gap_relative, best.scheme)
    return report


def raise_for_inconsistency(report):
    if not report.is_consistent:
        raise InconsistentDuality(report)
    return report
