"""
Scalar expressions over the variables x1 ... xd.

The grammar (see docs/expressions.md) has constants,
variables, + - *, integer powers, min, max, abs and clamp. Trees are
immutable, evaluation is vectorized over numpy arrays and total on reals.
"""
import logging
import re
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

expr_log = logging.getLogger('SuperHedge.expr')


def _wrap(value):
    if isinstance(value, ScalarExpr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError("Cannot build an expression from {!r}".format(value))


class ScalarExpr:
    """Base of the expression nodes; adds arithmetic operators for building trees in code."""

    def __call__(self, *args):
        return self.evaluate(*args)

    def evaluate(self, *args):
        raise NotImplementedError

    def to_text(self):
        raise NotImplementedError

    def children(self):
        return ()

    def variables(self):
        """The largest variable index used, 0 for a constant expression."""
        return max((child.variables() for child in self.children()), default=0)

    def __add__(self, other):
        return Add(self, _wrap(other))

    def __radd__(self, other):
        return Add(_wrap(other), self)

    def __sub__(self, other):
        return Sub(self, _wrap(other))

    def __rsub__(self, other):
        return Sub(_wrap(other), self)

    def __mul__(self, other):
        return Mul(self, _wrap(other))

    def __rmul__(self, other):
        return Mul(_wrap(other), self)

    def __neg__(self):
        return Mul(Const(-1.0), self)

    def __pow__(self, exponent):
        return Pow(self, exponent)

    def __abs__(self):
        return Abs(self)

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True, eq=True, repr=True)
class Const(ScalarExpr):
    value: float

    def evaluate(self, *args):
        return np.float64(self.value)

    def to_text(self):
        return repr(float(self.value))


@dataclass(frozen=True)
class Var(ScalarExpr):
    index: int

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError(_("Variables are numbered from x1."), code='grammar')

    def evaluate(self, *args):
        try:
            return np.asarray(args[self.index - 1], dtype=float)
        except IndexError:
            raise ValidationError(
                format_lazy(_("The expression uses x{index} but only {count} values were given."),
                            index=self.index, count=len(args)),
                code='grammar') from None

    def to_text(self):
        return 'x{}'.format(self.index)

    def variables(self):
        return self.index


@dataclass(frozen=True)
class _Binary(ScalarExpr):
    left: ScalarExpr
    right: ScalarExpr

    symbol = None

    def children(self):
        return (self.left, self.right)

    def to_text(self):
        return '({} {} {})'.format(self.left.to_text(), self.symbol, self.right.to_text())


class Add(_Binary):
    symbol = '+'

    def evaluate(self, *args):
        return self.left.evaluate(*args) + self.right.evaluate(*args)


class Sub(_Binary):
    symbol = '-'

    def evaluate(self, *args):
        return self.left.evaluate(*args) - self.right.evaluate(*args)


class Mul(_Binary):
    symbol = '*'

    def evaluate(self, *args):
        return self.left.evaluate(*args) * self.right.evaluate(*args)


class Min(_Binary):
    def evaluate(self, *args):
        return np.minimum(self.left.evaluate(*args), self.right.evaluate(*args))

    def to_text(self):
        return 'min({}, {})'.format(self.left.to_text(), self.right.to_text())


class Max(_Binary):
    def evaluate(self, *args):
        return np.maximum(self.left.evaluate(*args), self.right.evaluate(*args))

    def to_text(self):
        return 'max({}, {})'.format(self.left.to_text(), self.right.to_text())


@dataclass(frozen=True)
class Pow(ScalarExpr):
    base: ScalarExpr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, (int, np.integer)) or self.exponent < 0:
            raise ValidationError(_("Powers take a nonnegative integer exponent."), code='grammar')

    def children(self):
        return (self.base, )

    def evaluate(self, *args):
        return np.power(self.base.evaluate(*args), int(self.exponent))

    def to_text(self):
        return '({})^{}'.format(self.base.to_text(), int(self.exponent))


@dataclass(frozen=True)
class Abs(ScalarExpr):
    operand: ScalarExpr

    def children(self):
        return (self.operand, )

    def evaluate(self, *args):
        return np.abs(self.operand.evaluate(*args))

    def to_text(self):
        return 'abs({})'.format(self.operand.to_text())


@dataclass(frozen=True)
class Clamp(ScalarExpr):
    operand: ScalarExpr
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi:
            raise ValidationError(_("clamp(e, lo, hi) needs lo <= hi."), code='grammar')

    def children(self):
        return (self.operand, )

    def evaluate(self, *args):
        return np.clip(self.operand.evaluate(*args), self.lo, self.hi)

    def to_text(self):
        return 'clamp({}, {!r}, {!r})'.format(self.operand.to_text(), float(self.lo), float(self.hi))


x1, x2 = Var(1), Var(2)


def evaluate_on(expr, *args):
    """Evaluates `expr` and broadcasts the result to the common shape of the arguments."""
    shape = np.broadcast(*args).shape if args else ()
    return np.broadcast_to(np.asarray(expr.evaluate(*args), dtype=float), shape).copy()


TOKEN_RE = re.compile(
    r'\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)'
    r'|(?P<name>[A-Za-z_][A-Za-z_0-9]*)'
    r'|(?P<op>\*\*|[-+*^(),]))')
VARIABLE_RE = re.compile(r'x(\d*)')
FUNCTIONS = {'min': 2, 'max': 2, 'abs': 1, 'clamp': 3}


def _tokenize(text):
    tokens, position = [], 0
    text = text.rstrip()
    while position < len(text):
        match = TOKEN_RE.match(text, position)
        if not match or match.end() == position:
            raise ValidationError(
                format_lazy(_("Unexpected character at position {pos} of '{text}'."), pos=position, text=text),
                code='grammar')
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
        position = match.end()
    return tokens


class _Parser(object):
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.position = 0

    def error(self, message):
        return ValidationError(
            format_lazy(_("Invalid expression '{text}': {message}"), text=self.text, message=message),
            code='grammar')

    def peek(self):
        return self.tokens[self.position] if self.position < len(self.tokens) else (None, None)

    def take(self, value=None):
        kind, token = self.peek()
        if kind is None or (value is not None and token != value):
            raise self.error("expected '{}'".format(value) if value else "unexpected end")
        self.position += 1
        return kind, token

    def parse(self):
        tree = self.expression()
        if self.position != len(self.tokens):
            raise self.error("unexpected '{}'".format(self.peek()[1]))
        return tree

    def expression(self):
        tree = self.term()
        while self.peek()[1] in ('+', '-'):
            op = self.take()[1]
            tree = Add(tree, self.term()) if op == '+' else Sub(tree, self.term())
        return tree

    def term(self):
        tree = self.unary()
        while self.peek()[1] == '*':
            self.take()
            tree = Mul(tree, self.unary())
        return tree

    def unary(self):
        if self.peek()[1] == '-':
            self.take()
            operand = self.unary()
            if isinstance(operand, Const):
                return Const(-operand.value)
            return -operand
        if self.peek()[1] == '+':
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] in ('^', '**'):
            self.take()
            kind, token = self.take()
            if kind != 'number' or not token.isdigit():
                raise self.error("powers take a nonnegative integer exponent")
            return Pow(base, int(token))
        return base

    def atom(self):
        kind, token = self.take()
        if kind == 'number':
            return Const(float(token))
        if token == '(':
            tree = self.expression()
            self.take(')')
            return tree
        if kind == 'name':
            if token in FUNCTIONS:
                return self.function(token)
            variable = VARIABLE_RE.fullmatch(token)
            if variable:
                return Var(int(variable.group(1) or 1))
            raise self.error("unknown name '{}'".format(token))
        raise self.error("unexpected '{}'".format(token))

    def function(self, name):
        self.take('(')
        args = [self.expression()]
        while self.peek()[1] == ',':
            self.take()
            args.append(self.expression())
        self.take(')')
        if name in ('min', 'max'):
            if len(args) < 2:
                raise self.error("{}() takes at least two arguments".format(name))
            node = Min if name == 'min' else Max
            tree = args[0]
            for arg in args[1:]:
                tree = node(tree, arg)
            return tree
        if len(args) != FUNCTIONS[name]:
            raise self.error("{}() takes {} argument(s)".format(name, FUNCTIONS[name]))
        if name == 'abs':
            return Abs(args[0])
        lo, hi = args[1:]
        if not isinstance(lo, Const) or not isinstance(hi, Const):
            raise self.error("clamp() bounds must be numbers")
        return Clamp(args[0], lo.value, hi.value)


def parse_expression(text):
    """Parses the textual form of an expression into a tree."""
    if not isinstance(text, str) or not text.strip():
        raise ValidationError(_("An expression is required."), code='grammar')
    tree = _Parser(text).parse()
    expr_log.debug("Parsed [ %s ] as [ %s ]", text, tree.to_text())
    return tree
