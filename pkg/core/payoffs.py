"""
Claims of the class for which the superhedging duality holds: cylindrical
functions of finitely many fixings (Terminal being the single fixing at the
horizon), functions of the running maximum and functions of a time
integral of the path.
"""
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from .expressions import Abs, Clamp, Const, ScalarExpr, evaluate_on, parse_expression

# Slope of the ramp which turns an expression into an exceedance indicator.
INDICATOR_STEEPNESS = 1e12

# Two times closer than this are the same fixing.
ALIGNMENT_TOLERANCE = 1e-9


class GammaClass(Enum):
    CYLINDRICAL = 'Cylindrical'
    RUNNING_MAX = 'RunningMax'
    TIME_INTEGRAL = 'TimeIntegral'

    def __str__(self):
        return self.value


def _require_variables(expr, count, name):
    if not isinstance(expr, ScalarExpr):
        raise ValidationError(
            format_lazy(_("The {name} must be an expression."), name=name), code='grammar')
    if expr.variables() > count:
        raise ValidationError(
            format_lazy(_("The {name} may only use x1 ... x{count}."), name=name, count=count),
            code='grammar')


@dataclass(frozen=True)
class Terminal:
    g: ScalarExpr

    kind = 'terminal'

    def __post_init__(self):
        _require_variables(self.g, 1, 'terminal payoff')

    @property
    def outer(self):
        return self.g

    def with_outer(self, expr):
        return Terminal(expr)

    def dates(self, horizon):
        return (float(horizon), )


@dataclass(frozen=True)
class Cylindrical:
    fixing_dates: tuple
    F: ScalarExpr

    kind = 'cylindrical'

    def __post_init__(self):
        object.__setattr__(self, 'fixing_dates', tuple(float(t) for t in self.fixing_dates))
        if not self.fixing_dates:
            raise ValidationError(_("A cylindrical claim needs at least one fixing date."), code='ordering')
        if self.fixing_dates[0] <= 0 or np.any(np.diff(self.fixing_dates) <= 0):
            raise ValidationError(
                _("Fixing dates must be positive and strictly increasing."), code='ordering')
        _require_variables(self.F, len(self.fixing_dates), 'cylindrical payoff')

    @property
    def outer(self):
        return self.F

    def with_outer(self, expr):
        return replace(self, F=expr)

    def dates(self, horizon):
        return self.fixing_dates


@dataclass(frozen=True)
class RunningMax:
    G: ScalarExpr

    kind = 'running_max'

    def __post_init__(self):
        _require_variables(self.G, 1, 'running maximum payoff')

    @property
    def outer(self):
        return self.G

    def with_outer(self, expr):
        return RunningMax(expr)


@dataclass(frozen=True)
class TimeIntegral:
    F: ScalarExpr
    G: ScalarExpr

    kind = 'time_integral'

    def __post_init__(self):
        _require_variables(self.F, 1, 'integrand')
        _require_variables(self.G, 1, 'time-integral payoff')

    @property
    def outer(self):
        return self.G

    def with_outer(self, expr):
        return replace(self, G=expr)


PAYOFF_KINDS = {cls.kind: cls for cls in (Terminal, Cylindrical, RunningMax, TimeIntegral)}


def classify_gamma(payoff):
    """Which member of the duality class the claim belongs to."""
    if isinstance(payoff, (Terminal, Cylindrical)):
        return GammaClass.CYLINDRICAL
    if isinstance(payoff, RunningMax):
        return GammaClass.RUNNING_MAX
    if isinstance(payoff, TimeIntegral):
        return GammaClass.TIME_INTEGRAL
    raise TypeError("Not a payoff: {!r}".format(payoff))


def check_payoff(payoff, horizon):
    """Validates the claim against the horizon of a band."""
    if isinstance(payoff, Cylindrical) and payoff.fixing_dates[-1] > horizon + ALIGNMENT_TOLERANCE:
        raise ValidationError(
            format_lazy(_("Fixing date {t:g} lies beyond the horizon T={T:g}."),
                        t=payoff.fixing_dates[-1], T=horizon),
            code='range')
    return payoff


def locate_dates(times, dates):
    """Indices of the fixing dates in the time grid; every date must be a grid time."""
    times = np.asarray(times, dtype=float)
    indices = []
    for date in dates:
        k = int(np.argmin(np.abs(times - date)))
        if abs(times[k] - date) > ALIGNMENT_TOLERANCE:
            raise ValidationError(
                format_lazy(_("Fixing date {t:g} is not a time of the grid."), t=date), code='alignment')
        indices.append(k)
    return indices


def evaluate_paths(payoff, times, values):
    """
    The claim evaluated on every row of `values`, a (paths, knots) matrix of
    path values sampled at `times`.
    """
    times = np.asarray(times, dtype=float)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[1] != times.size:
        raise ValidationError(
            format_lazy(_("Paths have {k} samples but the grid has {n} times."), k=values.shape[1], n=times.size),
            code='shape')
    if isinstance(payoff, Terminal):
        return evaluate_on(payoff.g, values[:, -1])
    if isinstance(payoff, Cylindrical):
        fixings = [values[:, k] for k in locate_dates(times, payoff.fixing_dates)]
        return evaluate_on(payoff.F, *fixings)
    if isinstance(payoff, RunningMax):
        return evaluate_on(payoff.G, values.max(axis=1))
    if isinstance(payoff, TimeIntegral):
        integrand = evaluate_on(payoff.F, values[:, :-1])
        integral = integrand @ np.diff(times)
        return evaluate_on(payoff.G, integral)
    raise TypeError("Not a payoff: {!r}".format(payoff))


def evaluate_payoff(payoff, times, values):
    """The claim on a single path; the maximum is the discrete one and the integral uses left endpoints."""
    return float(evaluate_paths(payoff, times, np.asarray(values, dtype=float)[None, :])[0])


def scale_payoff(payoff, factor):
    if factor == 1:
        return payoff
    return payoff.with_outer(Const(float(factor)) * payoff.outer)


def same_functional(first, second):
    """Whether two claims read the path through the same fixings, maximum or integrand."""
    if type(first) is not type(second):
        return False
    if isinstance(first, Cylindrical):
        return first.fixing_dates == second.fixing_dates
    if isinstance(first, TimeIntegral):
        return first.F == second.F
    return True


def add_payoffs(first, second):
    """The sum of two claims sharing their path functional."""
    if not same_functional(first, second):
        raise ValidationError(_("Only claims on the same path functional can be added."), code='shape')
    return first.with_outer(first.outer + second.outer)


def exceedance(payoff, alpha, side='abs'):
    """
    The indicator claim of the event {|f| > alpha}, {f > alpha} ('upper')
    or {f < -alpha} ('lower'), as a steep clamp ramp on the outer expression.
    """
    if not alpha > 0:
        raise ValidationError(_("The threshold alpha must be positive."), code='range')
    outer = payoff.outer
    if side == 'abs':
        excess = Abs(outer) - alpha
    elif side == 'upper':
        excess = outer - alpha
    elif side == 'lower':
        excess = -outer - alpha
    else:
        raise ValueError("side must be one of 'abs', 'upper', 'lower'")
    return payoff.with_outer(Clamp(INDICATOR_STEEPNESS * excess, 0.0, 1.0))


def payoff_to_dict(payoff):
    data = {'kind': payoff.kind, 'expression': payoff.outer.to_text()}
    if isinstance(payoff, Cylindrical):
        data['dates'] = list(payoff.fixing_dates)
    if isinstance(payoff, TimeIntegral):
        data['integrand'] = payoff.F.to_text()
    return data


def payoff_from_dict(data):
    kind = data.get('kind', 'terminal')
    if kind not in PAYOFF_KINDS:
        raise ValidationError(
            format_lazy(_("Unknown payoff kind '{kind}'."), kind=kind), code='grammar')
    outer = parse_expression(data['expression'])
    if kind == 'terminal':
        return Terminal(outer)
    if kind == 'running_max':
        return RunningMax(outer)
    if kind == 'cylindrical':
        return Cylindrical(tuple(data.get('dates') or ()), outer)
    return TimeIntegral(parse_expression(data.get('integrand') or 'x'), outer)


def describe_payoff(payoff):
    if isinstance(payoff, Cylindrical):
        dates = ", ".join('{:g}'.format(t) for t in payoff.fixing_dates)
        return "{}[{}] {}".format(payoff.kind, dates, payoff.outer.to_text())
    if isinstance(payoff, TimeIntegral):
        return "{} G={} F={}".format(payoff.kind, payoff.G.to_text(), payoff.F.to_text())
    return "{} {}".format(payoff.kind, payoff.outer.to_text())
