"""
Backward dynamic programming for the superreplication price.

One step from slice i + 1 to slice i moves up or down by dx with
probability v/(2dx²) each. The continuation value is affine in the variance
v, so the supremum over [v̲_i, v̄_i] sits at an endpoint chosen by the sign of
the second difference of the successors.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .grids import make_aux, nearest_node

lattice_log = logging.getLogger('SuperHedge.lattice')

UPPER, LOWER = 'upper', 'lower'

# Second differences within this many ulps of the successor values are ties.
TIE_TOLERANCE = 64 * np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ValueSurface:
    spec: object
    aux: object
    payoff: object
    side: str
    values: tuple
    price: float

    def at(self, i):
        return self.values[i]

    @property
    def settlement(self):
        return self.aux.settlement


@dataclass(frozen=True, eq=False)
class Policy:
    """Variance choices per node; True selects the upper band endpoint v̄_i."""
    spec: object
    aux: object
    side: str
    choice: tuple

    def high_at(self, i, x, state):
        """The choice at the nodes of slice i nearest to the path states."""
        if i >= self.aux.settlement:
            return np.ones(np.shape(x), dtype=bool)
        rows, cols = nearest_node(self.spec, self.aux, i, x, state)
        return self.choice[i][rows, cols]

    def variance_at(self, i, x, state):
        return np.where(self.high_at(i, x, state), self.spec.v_high[i], self.spec.v_low[i])

    def high_fraction(self):
        """Share of reachable nodes at which the upper endpoint is chosen."""
        high = total = 0
        for i in range(self.aux.settlement):
            mask = self.aux.valid_mask(i)
            high += int(np.count_nonzero(self.choice[i] & mask))
            total += int(np.count_nonzero(mask))
        return high / total if total else 1.0

    def is_all_high(self):
        return all(bool(np.all(choice)) for choice in self.choice[:self.aux.settlement])

    def summary(self):
        return {
            'side': self.side,
            'high_fraction': self.high_fraction(),
            'all_high': self.is_all_high(),
            'all_low': self.high_fraction() == 0.0,
            'high_fraction_by_step': [
                float(np.mean(self.choice[i][self.aux.valid_mask(i)])) for i in range(self.aux.settlement)
            ],
        }


def backward_step(spec, aux, next_values, i, side=UPPER, choice=None):
    """
    Values of slice i from slice i + 1, with the variance choice made here
    unless `choice` is given.
    """
    up, mid, down = aux.successors(aux.next_values(next_values, i), i)
    gamma = up + down - 2 * mid
    if choice is None:
        tie = TIE_TOLERANCE * (np.abs(up) + 2 * np.abs(mid) + np.abs(down))
        choice = gamma >= -tie if side == UPPER else gamma <= tie
    variance = np.where(choice, spec.v_high[i], spec.v_low[i])
    return mid + variance / (2 * spec.dx ** 2) * gamma, choice


def _price(spec, payoff, side, full_surface):
    aux = make_aux(spec, payoff)
    n, settlement = spec.n_steps, aux.settlement
    current = aux.terminal_values()
    values, choices = [None] * (n + 1), [None] * n
    if full_surface:
        for i in range(settlement + 1, n + 1):
            values[i] = np.full((spec.width, 1), np.nan)
            choices[i - 1] = np.ones((spec.width, 1), dtype=bool)
        values[settlement] = current
    for i in range(settlement - 1, -1, -1):
        current, choice = backward_step(spec, aux, current, i, side)
        if full_surface:
            values[i], choices[i] = current, choice
    price = aux.root_value(current)
    lattice_log.info("%s price of %s on %s: %.10g", side.capitalize(), payoff.kind, spec.describe(), price)
    if not full_surface:
        return price, None, None
    surface = ValueSurface(spec=spec, aux=aux, payoff=payoff, side=side, values=tuple(values), price=price)
    return price, surface, Policy(spec=spec, aux=aux, side=side, choice=tuple(choices))


def price_upper(spec, payoff, full_surface=True):
    """
    The superreplication price on the lattice, with the value surface and the
    worst-case variance policy. With `full_surface=False` only the price is
    kept and the surface and policy are None.
    """
    return _price(spec, payoff, UPPER, full_surface)


def price_lower(spec, payoff, full_surface=True):
    """The subreplication price, that is minus the superreplication price of minus the claim."""
    return _price(spec, payoff, LOWER, full_surface)


def consistency_residual(surface, policy):
    """
    Largest relative difference between the surface and its recomputation
    from successors under the recorded choices, over reachable nodes.
    """
    spec, aux = surface.spec, surface.aux
    worst = 0.0
    for i in range(aux.settlement):
        recomputed, _choice = backward_step(
            spec, aux, surface.values[i + 1], i, surface.side, choice=policy.choice[i])
        mask = aux.valid_mask(i)
        scale = np.maximum(np.abs(surface.values[i]), 1.0)
        worst = max(worst, float(np.max(np.abs(recomputed - surface.values[i])[mask] / scale[mask])))
    return worst
