"""
The recombining additive lattice: an equal-variance time grid, the x-levels
j·dx for |j| <= n, and the auxiliary state carried by path-dependent claims.

Every time slice holds the full fixed-width grid of 2n + 1 levels. Nodes
outside the reachable cone |j| <= i are computed with a linear boundary and
never feed into reachable ones.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from core.bands import equal_variance_knots, validate_band
from core.expressions import evaluate_on
from core.payoffs import Cylindrical, RunningMax, Terminal, TimeIntegral, check_payoff, locate_dates

lattice_log = logging.getLogger('SuperHedge.lattice')


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    band: object
    n_steps: int
    time_knots: np.ndarray
    dx: float
    v_low: np.ndarray
    v_high: np.ndarray

    @property
    def width(self):
        return 2 * self.n_steps + 1

    @property
    def horizon(self):
        return float(self.time_knots[-1])

    @cached_property
    def x_levels(self):
        return self.dx * np.arange(-self.n_steps, self.n_steps + 1)

    @cached_property
    def time_steps(self):
        return np.diff(self.time_knots)

    def x_coordinate(self, x):
        """Fractional array index of the values x, clamped to the grid."""
        return np.clip(np.asarray(x, dtype=float) / self.dx + self.n_steps, 0, self.width - 1)

    def time_index(self, t):
        """Index of the time knot nearest to t."""
        return int(np.argmin(np.abs(self.time_knots - t)))

    def describe(self):
        return "lattice n={} dx={:.6g} over {}".format(self.n_steps, self.dx, self.band.describe())


def build_lattice(band, n_steps):
    """
    Discretizes the band on n steps of equal upper variance μ̄_T / n, with
    dx² equal to the largest upper step variance.
    """
    if isinstance(n_steps, bool) or not isinstance(n_steps, (int, np.integer)) or n_steps < 1:
        raise ValidationError(_("The number of steps must be a positive integer."), code='range')
    if not band.total_upper > 0:
        raise ValidationError(_("The upper measure is zero; the band is degenerate."), code='degenerate-band')
    report = validate_band(band)
    if report:
        raise ValidationError(report)
    knots = equal_variance_knots(band, int(n_steps))
    v_high = np.diff(band.upper(knots))
    v_low = np.clip(np.diff(band.lower(knots)), 0, v_high)
    spec = LatticeSpec(
        band=band,
        n_steps=int(n_steps),
        time_knots=knots,
        dx=float(np.sqrt(v_high.max())),
        v_low=v_low,
        v_high=v_high,
    )
    lattice_log.debug("Built %s", spec.describe())
    return spec


def _linear_pad(values):
    """Adds one row at each end of the x-axis by linear extrapolation."""
    return np.concatenate([2 * values[:1] - values[1:2], values, 2 * values[-1:] - values[-2:-1]])


def bilinear(array, rows, cols):
    """Bilinear interpolation in an array at fractional (row, column) coordinates."""
    n_rows, n_cols = array.shape
    r0 = np.clip(np.floor(rows).astype(int), 0, max(n_rows - 2, 0))
    c0 = np.clip(np.floor(cols).astype(int), 0, max(n_cols - 2, 0))
    r1, c1 = np.minimum(r0 + 1, n_rows - 1), np.minimum(c0 + 1, n_cols - 1)
    wr, wc = rows - r0, cols - c0
    return ((1 - wr) * ((1 - wc) * array[r0, c0] + wc * array[r0, c1])
            + wr * ((1 - wc) * array[r1, c0] + wc * array[r1, c1]))


class AuxGrid(object):
    """
    Auxiliary state of a claim. The base class carries no state (one aux
    level); subclasses keep the running maximum, the running time integral
    or the first fixing of a two-date cylindrical claim.
    """
    kind = 'none'

    def __init__(self, spec, payoff, settlement=None):
        self.spec = spec
        self.payoff = payoff
        self.settlement = spec.n_steps if settlement is None else settlement

    def size(self, i):
        return 1

    def levels(self, i):
        return np.zeros(1)

    def terminal_values(self):
        """Claim values at the settlement slice, shape (width, size)."""
        return evaluate_on(self.payoff.outer, self.spec.x_levels)[:, None]

    def next_values(self, values, i):
        """The slice i + 1 as seen from slice i."""
        return values

    def successors(self, next_values, i):
        """Values at the (up, mid, down) successors of every node of slice i."""
        padded = _linear_pad(next_values)
        return padded[2:], padded[1:-1], padded[:-2]

    def coordinate(self, i, state):
        """Fractional aux index of the path states at slice i."""
        return np.zeros(np.shape(state))

    def initial_state(self, n_paths):
        return np.zeros(n_paths)

    def advance(self, state, x_prev, x_new, i):
        """The aux state after the step from slice i to slice i + 1."""
        return state

    def root_value(self, values):
        return float(values[self.spec.n_steps, 0])

    def valid_mask(self, i):
        """Nodes of slice i which some path reaches, for exports and scans."""
        j = np.arange(-self.spec.n_steps, self.spec.n_steps + 1)
        return np.broadcast_to((np.abs(j) <= i)[:, None], (self.spec.width, self.size(i)))

    def path_states(self, paths):
        """Aux states of every path at every knot, shape (paths, knots)."""
        paths = np.asarray(paths, dtype=float)
        states = np.empty_like(paths)
        state = self.initial_state(paths.shape[0])
        states[:, 0] = state
        for i in range(paths.shape[1] - 1):
            state = self.advance(state, paths[:, i], paths[:, i + 1], i)
            states[:, i + 1] = state
        return states

    def describe(self):
        return self.kind


class RunningMaxAux(AuxGrid):
    """Running maximum snapped to the x-levels k·dx, k = 0 ... n."""
    kind = 'running_max'

    def size(self, i):
        return self.spec.n_steps + 1

    def levels(self, i):
        return self.spec.dx * np.arange(self.spec.n_steps + 1)

    @cached_property
    def _signed_levels(self):
        return np.arange(-self.spec.n_steps, self.spec.n_steps + 1)[:, None]

    def _effective(self, offset=0):
        n = self.spec.n_steps
        k = np.arange(n + 1)[None, :]
        return np.clip(np.maximum(k, self._signed_levels + offset), 0, n)

    def terminal_values(self):
        kappa = settings.LATTICE_RUNNING_MAX_CORRECTION
        return evaluate_on(self.payoff.G, (self._effective() + kappa) * self.spec.dx)

    def successors(self, next_values, i):
        padded = _linear_pad(next_values)
        rows = np.arange(self.spec.width)[:, None]
        k_stay, k_up = self._effective(), self._effective(1)
        return padded[rows + 2, k_up], padded[rows + 1, k_stay], padded[rows, k_stay]

    def coordinate(self, i, state):
        return np.clip(np.asarray(state) / self.spec.dx, 0, self.spec.n_steps)

    def advance(self, state, x_prev, x_new, i):
        return np.maximum(state, x_new)

    def valid_mask(self, i):
        j = self._signed_levels
        k = np.arange(self.spec.n_steps + 1)[None, :]
        return (np.abs(j) <= i) & (k >= np.maximum(j, 0)) & (k <= i)

    def describe(self):
        return "running_max levels=0..{}·dx".format(self.spec.n_steps)


class IntegralAux(AuxGrid):
    """
    Running left-endpoint integral of F(B) on a uniform grid covering the
    reachable envelope and 0; values between and beyond points are linear.
    """
    kind = 'integral'

    def __init__(self, spec, payoff, settlement=None):
        super().__init__(spec, payoff, settlement)
        integrand = evaluate_on(payoff.F, spec.x_levels)
        self.integrand = integrand
        lo = min(0.0, spec.horizon * integrand.min())
        hi = max(0.0, spec.horizon * integrand.max())
        if hi - lo < 1e-12:
            lo, hi = lo - 0.5, hi + 0.5
        self.n_points = max(settings.LATTICE_INTEGRAL_POINTS_PER_STEP * spec.n_steps, 2)
        self.grid = np.linspace(lo, hi, self.n_points)
        self.dy = self.grid[1] - self.grid[0]

    def size(self, i):
        return self.n_points

    def levels(self, i):
        return self.grid

    def terminal_values(self):
        return np.broadcast_to(evaluate_on(self.payoff.G, self.grid), (self.spec.width, self.n_points)).copy()

    def _interpolate(self, rows, query):
        position = (query - self.grid[0]) / self.dy
        k0 = np.clip(np.floor(position).astype(int), 0, self.n_points - 2)
        weight = position - k0
        return rows[np.arange(rows.shape[0])[:, None], k0] * (1 - weight) \
            + rows[np.arange(rows.shape[0])[:, None], k0 + 1] * weight

    def successors(self, next_values, i):
        padded = _linear_pad(next_values)
        query = self.grid[None, :] + self.integrand[:, None] * self.spec.time_steps[i]
        return (self._interpolate(padded[2:], query), self._interpolate(padded[1:-1], query),
                self._interpolate(padded[:-2], query))

    def coordinate(self, i, state):
        # Not clamped: the interpolation extrapolates linearly past the grid.
        return (np.asarray(state) - self.grid[0]) / self.dy

    def advance(self, state, x_prev, x_new, i):
        return state + evaluate_on(self.payoff.F, x_prev) * self.spec.time_steps[i]

    def root_value(self, values):
        return float(self._interpolate(values[self.spec.n_steps:self.spec.n_steps + 1], np.zeros((1, 1)))[0, 0])

    def describe(self):
        return "integral {} points on [{:.6g}, {:.6g}]".format(self.n_points, self.grid[0], self.grid[-1])


class FixingAux(AuxGrid):
    """The x-level of the first fixing, held from its date to settlement."""
    kind = 'fixing'

    def __init__(self, spec, payoff, fixing, settlement):
        super().__init__(spec, payoff, settlement)
        self.fixing = fixing

    def size(self, i):
        return self.spec.width if self.fixing <= i <= self.settlement else 1

    def levels(self, i):
        return self.spec.x_levels if self.fixing <= i <= self.settlement else np.zeros(1)

    def terminal_values(self):
        x = self.spec.x_levels
        return evaluate_on(self.payoff.F, x[None, :], x[:, None])

    def next_values(self, values, i):
        if i + 1 == self.fixing:
            return np.diagonal(values)[:, None]
        return values

    def coordinate(self, i, state):
        if self.fixing <= i <= self.settlement:
            return self.spec.x_coordinate(state)
        return np.zeros(np.shape(state))

    def advance(self, state, x_prev, x_new, i):
        return x_new if i + 1 == self.fixing else state

    def valid_mask(self, i):
        mask = super().valid_mask(i)
        if self.size(i) > 1:
            mask = mask & (np.abs(np.arange(-self.spec.n_steps, self.spec.n_steps + 1)) <= self.fixing)[None, :]
        return mask

    def describe(self):
        return "fixing at knot {} settled at knot {}".format(self.fixing, self.settlement)


def make_aux(spec, payoff):
    """The auxiliary grid a claim needs on the lattice; checks date alignment."""
    check_payoff(payoff, spec.horizon)
    if isinstance(payoff, Terminal):
        return AuxGrid(spec, payoff)
    if isinstance(payoff, RunningMax):
        return RunningMaxAux(spec, payoff)
    if isinstance(payoff, TimeIntegral):
        return IntegralAux(spec, payoff)
    if isinstance(payoff, Cylindrical):
        dates = payoff.fixing_dates
        if len(dates) > 2:
            raise ValidationError(
                format_lazy(_("Cylindrical claims on {d} dates are not supported; at most 2."), d=len(dates)),
                code='unsupported-dimension')
        indices = locate_dates(spec.time_knots, dates)
        if len(indices) == 1:
            return AuxGrid(spec, payoff, settlement=indices[0])
        return FixingAux(spec, payoff, fixing=indices[0], settlement=indices[1])
    raise TypeError("Not a payoff: {!r}".format(payoff))


def nearest_node(spec, aux, i, x, state):
    """Integer (row, aux) indices of the nodes of slice i nearest to the path states."""
    rows = np.rint(spec.x_coordinate(x)).astype(int)
    cols = np.clip(np.rint(aux.coordinate(i, state)).astype(int), 0, aux.size(i) - 1)
    return rows, cols
