import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from core.utils import loglog_slope

from .grids import build_lattice
from .pricing import UPPER, price_lower, price_upper

lattice_log = logging.getLogger('SuperHedge.lattice')


@dataclass
class ConvergenceReport:
    steps: list
    prices: list
    side: str = UPPER
    differences: list = field(default_factory=list)
    order: float = float('nan')
    order_stderr: float = float('nan')

    @property
    def is_exact(self):
        """All resolutions agree to rounding."""
        return all(d <= 1e-12 * max(1.0, abs(self.prices[-1])) for d in self.differences)

    def as_dict(self):
        return {
            'side': self.side,
            'steps': list(self.steps),
            'prices': list(self.prices),
            'differences': list(self.differences),
            'order': None if np.isnan(self.order) else self.order,
            'order_stderr': None if np.isnan(self.order_stderr) else self.order_stderr,
        }


def convergence_sweep(band, payoff, steps, side=UPPER):
    """
    Lattice prices over increasing resolutions. The empirical order is minus
    the log-log slope of the successive differences against n.
    """
    steps = [int(n) for n in steps]
    if not steps or any(b <= a for a, b in zip(steps, steps[1:])):
        raise ValidationError(_("The resolutions must be strictly increasing."), code='steps-order')
    pricer = price_upper if side == UPPER else price_lower
    prices = []
    for n in steps:
        price, _surface, _policy = pricer(build_lattice(band, n), payoff, full_surface=False)
        prices.append(price)
    differences = [abs(b - a) for a, b in zip(prices, prices[1:])]
    slope, stderr = loglog_slope(steps[1:], differences)
    lattice_log.debug("Convergence over %s: %s", steps, prices)
    return ConvergenceReport(
        steps=steps, prices=prices, side=side, differences=differences,
        order=-slope if not np.isnan(slope) else slope, order_stderr=stderr)
