"""
The superhedge of a claim on a grid refined from the lattice's.

Paths of an admissible measure move by steps of any size between √v̲ and
√v̄, most of which miss the lattice levels. The holdings are therefore
computed by their own backward recursion on the levels q·h, h = dx / m:
at every node the value is the smallest capital from which one holding
covers the next value after every admissible move, and the holding is the
slope of the chord realizing it.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from core.expressions import evaluate_on

from .grids import AuxGrid, bilinear
from .pricing import LOWER

lattice_log = logging.getLogger('SuperHedge.lattice')

SNAP_TOLERANCE = 1e-9


class HedgeGrid(object):
    """
    The x-levels q·h for |q| <= n·m, with the aux state of the claim: the
    running maximum on the levels q·h, q >= 0, the first fixing on the
    x-levels and the running integral on the lattice's integral grid.
    """

    def __init__(self, aux, refinement):
        if isinstance(refinement, bool) or not isinstance(refinement, (int, np.integer)) or refinement < 1:
            raise ValidationError(_("The hedge grid refinement must be a positive integer."), code='range')
        self.aux = aux
        self.spec = aux.spec
        self.refinement = int(refinement)
        self.half_width = self.spec.n_steps * self.refinement
        self.h = self.spec.dx / self.refinement

    @property
    def width(self):
        return 2 * self.half_width + 1

    @cached_property
    def x_levels(self):
        return self.h * np.arange(-self.half_width, self.half_width + 1)

    @cached_property
    def _integrand(self):
        return evaluate_on(self.aux.payoff.F, self.x_levels)

    def size(self, i):
        kind = self.aux.kind
        if kind == 'running_max':
            return self.half_width + 1
        if kind == 'integral':
            return self.aux.n_points
        if kind == 'fixing' and self.aux.fixing <= i:
            return self.width
        return 1

    def levels(self, i):
        kind = self.aux.kind
        if kind == 'running_max':
            return self.h * np.arange(self.half_width + 1)
        if kind == 'integral':
            return self.aux.grid
        if self.size(i) > 1:
            return self.x_levels
        return np.zeros(1)

    def row_coordinate(self, x):
        """Fractional row of the values x; not clamped."""
        return np.asarray(x, dtype=float) / self.h + self.half_width

    def state_coordinate(self, i, state, rows):
        """Fractional aux column of the states at slice i, for paths at the given rows."""
        if self.size(i) == 1:
            return np.zeros(np.shape(rows))
        kind = self.aux.kind
        if kind == 'running_max':
            # A maximum below the current level is the state with the maximum at the level.
            return np.maximum(np.clip(np.asarray(state) / self.h, 0, self.half_width), rows - self.half_width)
        if kind == 'integral':
            return self.aux.coordinate(i, state)
        return np.clip(self.row_coordinate(state), 0, self.width - 1)

    def terminal_values(self):
        """The claim at the settlement slice, as the paths settle it: discrete maximum, left-endpoint integral."""
        x, payoff, kind = self.x_levels, self.aux.payoff, self.aux.kind
        if kind == 'running_max':
            return evaluate_on(payoff.G, np.maximum(self.levels(0)[None, :], x[:, None]))
        if kind == 'integral':
            return np.broadcast_to(evaluate_on(payoff.G, self.aux.grid), (self.width, self.aux.n_points)).copy()
        if kind == 'fixing':
            return evaluate_on(payoff.F, x[None, :], x[:, None])
        return evaluate_on(payoff.outer, x)[:, None]

    def move_sizes(self, i):
        """
        Step sizes tried at slice i: √v̲_i, √v̄_i and the multiples of h
        between them. Sizes within rounding of a multiple of h are snapped
        to it.
        """
        low = np.sqrt(self.spec.v_low[i]) / self.h
        high = np.sqrt(self.spec.v_high[i]) / self.h
        sizes = np.concatenate([[low, high], np.arange(np.floor(low) + 1, np.ceil(high))])
        snapped = np.rint(sizes)
        sizes = np.where(np.abs(sizes - snapped) < SNAP_TOLERANCE, snapped, sizes)
        return self.h * np.unique(sizes[sizes > 0])

    def successor(self, values, i, move):
        """The slice i + 1 values at the state every node of slice i reaches by the move."""
        rows = self.row_coordinate(self.x_levels + move)[:, None]
        kind = self.aux.kind
        if kind == 'running_max':
            cols = np.clip(np.maximum(np.arange(self.half_width + 1)[None, :], rows - self.half_width),
                           0, self.half_width)
        elif kind == 'integral':
            drift = self._integrand[:, None] * self.spec.time_steps[i]
            cols = self.aux.coordinate(i + 1, self.aux.grid[None, :] + drift)
        elif kind == 'fixing' and i + 1 == self.aux.fixing:
            cols = np.clip(rows, 0, self.width - 1)
        elif self.size(i) > 1:
            cols = np.arange(self.width, dtype=float)[None, :]
        else:
            cols = np.zeros((1, 1))
        rows, cols = np.broadcast_arrays(rows, cols)
        return bilinear(values, rows, cols)

    def root_value(self, values):
        rows = np.array([float(self.half_width)])
        return float(bilinear(values, rows, self.state_coordinate(0, self.aux.initial_state(1), rows))[0])


def superhedge_step(grid, values, i):
    """
    Values and holdings at slice i from the values at slice i + 1. Over the
    moves ±s of the slice, the value is the highest chord at 0 between a
    down and an up successor; the slope of that chord is the holding, and
    it covers every move tried. A band allowing no move adds staying put.
    """
    sizes = grid.move_sizes(i)
    ups = [grid.successor(values, i, s) for s in sizes]
    downs = [grid.successor(values, i, -s) for s in sizes]
    best = delta = None
    for a, down in zip(sizes, downs):
        for b, up in zip(sizes, ups):
            chord = (b * down + a * up) / (a + b)
            slope = (up - down) / (a + b)
            if best is None:
                best, delta = chord, slope
                continue
            better = chord > best
            best = np.where(better, chord, best)
            delta = np.where(better, slope, delta)
    if grid.spec.v_low[i] <= 0:
        best = np.maximum(best, grid.successor(values, i, 0.0))
    return best, delta


@dataclass(frozen=True, eq=False)
class HedgeStrategy:
    """
    Holdings h in the canonical process per node of the slices 0 ... n - 1
    of a hedge grid, looked up by bilinear interpolation in x and in the
    aux state. The capital is the value the recursion starts from.
    """
    grid: object
    delta: tuple
    capital: float = None

    @property
    def spec(self):
        return self.grid.spec

    @property
    def aux(self):
        return self.grid.aux

    def at(self, i, x, state=None):
        x = np.asarray(x, dtype=float)
        if i >= self.aux.settlement:
            return np.zeros(x.shape)
        if state is None:
            state = np.zeros(x.shape)
        rows = np.clip(self.grid.row_coordinate(x), 0, self.grid.width - 1)
        cols = self.grid.state_coordinate(i, np.asarray(state, dtype=float), rows)
        return bilinear(self.delta[i], rows, np.asarray(cols, dtype=float))

    def lookup(self, t, x, state=None):
        """Holdings at the knot nearest to time t."""
        i = min(self.spec.time_index(t), self.spec.n_steps - 1)
        return self.at(i, x, state)

    @classmethod
    def deterministic(cls, spec, holdings):
        """A strategy holding holdings[i] over the step from knot i to knot i + 1, whatever the path."""
        holdings = np.broadcast_to(np.asarray(holdings, dtype=float), (spec.n_steps, ))
        grid = HedgeGrid(AuxGrid(spec, None), 1)
        return cls(grid=grid, delta=tuple(np.full((grid.width, 1), h) for h in holdings))


def extract_delta(surface, refinement=None):
    """
    The superhedge of the surface's claim on its lattice, on a grid
    refined by the given factor (HEDGE_GRID_REFINEMENT by default).
    Paths whose steps are multiples of h are covered exactly from the
    strategy's capital. A lower surface gets the buyer's side: the
    superhedge of the short claim, negated.
    """
    if surface is None or surface.values[0] is None:
        raise ValidationError(_("Hedging needs the full value surface."), code='shape')
    spec, aux = surface.spec, surface.aux
    sign = -1.0 if surface.side == LOWER else 1.0
    grid = HedgeGrid(aux, settings.HEDGE_GRID_REFINEMENT if refinement is None else refinement)
    values = sign * grid.terminal_values()
    delta = [None] * spec.n_steps
    for i in reversed(range(spec.n_steps)):
        if i >= aux.settlement:
            delta[i] = np.zeros((grid.width, 1))
            continue
        values, step = superhedge_step(grid, values, i)
        delta[i] = sign * step
    capital = sign * grid.root_value(values)
    lattice_log.info("Hedge of %s on h=dx/%d: capital %.10g against %s price %.10g",
                     aux.payoff.kind, grid.refinement, capital, surface.side, surface.price)
    return HedgeStrategy(grid=grid, delta=tuple(delta), capital=capital)
