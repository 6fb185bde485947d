"""
Expressions - closed-form scalar fields in chart coordinates.

FieldExpr trees are built by the parser (`parse_expression`) or by
arithmetic on other trees. They support:
  * evaluation on floats or Jets (exact value, gradient and Hessian),
  * symbolic partial differentiation with light constant folding,
  * substitution of variables by other trees (chart changes).

`Synthetic` wraps a Python callable for fields assembled internally (the
twistor structures), so they can sit in the same matrices as parsed
coefficients.

Grammar:

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] base ('^' INT)?
    base   := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'
    FUNC   := sin | cos | exp | sqrt

The optional leading '-' on a factor is the only addition to the plain
precedence grammar; `u**2` is rejected.
"""

from collections.abc import Callable, Collection, Mapping
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import pyparsing as pp

from gktwist.core.errors import DomainError, ExpressionSyntaxError
from gktwist.services import jets
from gktwist.services.jets import Jet, Scalar


class FieldExpr:
    """Base class of expression nodes. Subclasses are frozen dataclasses."""

    def evaluate(self, env: Mapping[str, Scalar]) -> Scalar:
        raise NotImplementedError

    def diff(self, name: str) -> "FieldExpr":
        raise NotImplementedError

    def free_variables(self) -> frozenset[str]:
        raise NotImplementedError

    def substitute(self, mapping: Mapping[str, "FieldExpr"]) -> "FieldExpr":
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return isinstance(self, Constant) and self.value == 0.0

    def jet(self, names: tuple[str, ...], point: tuple[float, ...], order: int = 1) -> Scalar:
        """Evaluate with coordinates `names` seeded as Jets at `point`."""
        env = dict(zip(names, jets.variables(list(point), order)))
        return self.evaluate(env)

    def __call__(self, **coords: float) -> float:
        return jets.value(self.evaluate(coords))

    # --- building ---

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n: int):
        return power(self, n)


@dataclass(frozen=True, eq=True)
class Constant(FieldExpr):
    value: float

    def evaluate(self, env):
        return self.value

    def diff(self, name):
        return ZERO

    def free_variables(self):
        return frozenset()

    def substitute(self, mapping):
        return self

    def __str__(self):
        return repr(self.value) if self.value >= 0 else f"({self.value!r})"


@dataclass(frozen=True, eq=True)
class Variable(FieldExpr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise DomainError(f"variable {self.name!r} is not bound at evaluation") from None

    def diff(self, name):
        return ONE if name == self.name else ZERO

    def free_variables(self):
        return frozenset({self.name})

    def substitute(self, mapping):
        return mapping.get(self.name, self)

    def __str__(self):
        return self.name


@dataclass(frozen=True, eq=True)
class BinaryOp(FieldExpr):
    op: str  # one of + - * /
    left: FieldExpr
    right: FieldExpr

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if not isinstance(b, Jet) and b == 0:
            raise DomainError(f"division by zero in {self}")
        return a / b

    def diff(self, name):
        a, b = self.left, self.right
        da, db = a.diff(name), b.diff(name)
        if self.op == "+":
            return add(da, db)
        if self.op == "-":
            return sub(da, db)
        if self.op == "*":
            return add(mul(da, b), mul(a, db))
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))

    def free_variables(self):
        return self.left.free_variables() | self.right.free_variables()

    def substitute(self, mapping):
        return _BUILDERS[self.op](self.left.substitute(mapping), self.right.substitute(mapping))

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True, eq=True)
class Negate(FieldExpr):
    arg: FieldExpr

    def evaluate(self, env):
        return -self.arg.evaluate(env)

    def diff(self, name):
        return neg(self.arg.diff(name))

    def free_variables(self):
        return self.arg.free_variables()

    def substitute(self, mapping):
        return neg(self.arg.substitute(mapping))

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True, eq=True)
class Power(FieldExpr):
    base: FieldExpr
    exponent: int

    def evaluate(self, env):
        return self.base.evaluate(env) ** self.exponent

    def diff(self, name):
        return mul(mul(Constant(float(self.exponent)), power(self.base, self.exponent - 1)), self.base.diff(name))

    def free_variables(self):
        return self.base.free_variables()

    def substitute(self, mapping):
        return power(self.base.substitute(mapping), self.exponent)

    def __str__(self):
        return f"{self.base}^{self.exponent}"


@dataclass(frozen=True, eq=True)
class Function(FieldExpr):
    name: str  # sin, cos, exp, sqrt
    arg: FieldExpr

    def evaluate(self, env):
        return jets.FUNCTIONS[self.name](self.arg.evaluate(env))

    def diff(self, name):
        inner = self.arg.diff(name)
        if inner.is_zero:
            return ZERO
        if self.name == "sin":
            outer = Function("cos", self.arg)
        elif self.name == "cos":
            outer = neg(Function("sin", self.arg))
        elif self.name == "exp":
            outer = self
        else:
            outer = div(ONE, mul(Constant(2.0), self))
        return mul(outer, inner)

    def free_variables(self):
        return self.arg.free_variables()

    def substitute(self, mapping):
        return function(self.name, self.arg.substitute(mapping))

    def __str__(self):
        return f"{self.name}({self.arg})"


@dataclass(frozen=True, eq=False)
class Synthetic(FieldExpr):
    """Opaque field computed by `fn(env)`; differentiable through Jets."""

    fn: Callable[[Mapping[str, Scalar]], Scalar]
    names: tuple[str, ...]
    label: str = "synthetic"

    def evaluate(self, env):
        return self.fn(env)

    def diff(self, name):
        if name not in self.names:
            return ZERO
        return SyntheticPartial(self, name)

    def free_variables(self):
        return frozenset(self.names)

    def substitute(self, mapping):
        raise NotImplementedError("synthetic fields cannot be re-coordinatized")

    def __str__(self):
        return f"<{self.label}>"


@dataclass(frozen=True, eq=False)
class SyntheticPartial(FieldExpr):
    """First partial of a Synthetic field. Carries first derivatives only."""

    parent: Synthetic
    name: str

    def evaluate(self, env):
        names = self.parent.names
        point = [jets.value(env[n]) for n in names]
        inner = self.parent.evaluate(dict(zip(names, jets.variables(point, order=2))))
        i = names.index(self.name)
        if not isinstance(inner, Jet):
            return 0.0
        slope = float(inner.grad[i])
        outer = [env[n] for n in names]
        if not any(isinstance(x, Jet) for x in outer):
            return slope
        size = next(x.size for x in outer if isinstance(x, Jet))
        grad = sum((inner.hess[i, k] * jets.gradient(x, size) for k, x in enumerate(outer)), start=np.zeros(size))
        return Jet(slope, grad)

    def diff(self, name):
        raise NotImplementedError("second partials of synthetic fields are not materialized")

    def free_variables(self):
        return self.parent.free_variables()

    def substitute(self, mapping):
        raise NotImplementedError("synthetic fields cannot be re-coordinatized")

    def __str__(self):
        return f"d<{self.parent.label}>/d{self.name}"


ZERO = Constant(0.0)
ONE = Constant(1.0)


# --- simplifying constructors ---

def as_expr(x) -> FieldExpr:
    if isinstance(x, FieldExpr):
        return x
    return Constant(float(x))


def _const(x: FieldExpr) -> float | None:
    return x.value if isinstance(x, Constant) else None


def add(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Constant(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    return BinaryOp("+", a, b)


def sub(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Constant(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    return BinaryOp("-", a, b)


def mul(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Constant(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return ZERO
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    if ca == -1.0:
        return neg(b)
    if cb == -1.0:
        return neg(a)
    return BinaryOp("*", a, b)


def div(a: FieldExpr, b: FieldExpr) -> FieldExpr:
    ca, cb = _const(a), _const(b)
    if cb == 0.0:
        raise DomainError("division by the constant 0")
    if ca == 0.0:
        return ZERO
    if ca is not None and cb is not None:
        return Constant(ca / cb)
    if cb == 1.0:
        return a
    return BinaryOp("/", a, b)


def neg(a: FieldExpr) -> FieldExpr:
    if isinstance(a, Constant):
        return Constant(-a.value)
    if isinstance(a, Negate):
        return a.arg
    return Negate(a)


def power(a: FieldExpr, n: int) -> FieldExpr:
    if n < 0:
        raise DomainError(f"negative exponent {n}")
    if n == 0:
        return ONE
    if n == 1:
        return a
    if isinstance(a, Constant):
        return Constant(a.value**n)
    return Power(a, n)


def function(name: str, a: FieldExpr) -> FieldExpr:
    if isinstance(a, Constant):
        return Constant(jets.FUNCTIONS[name](a.value))
    return Function(name, a)


_BUILDERS = {"+": add, "-": sub, "*": mul, "/": div}


def sin(a) -> FieldExpr:
    return function("sin", as_expr(a))


def cos(a) -> FieldExpr:
    return function("cos", as_expr(a))


def exp(a) -> FieldExpr:
    return function("exp", as_expr(a))


def sqrt(a) -> FieldExpr:
    return function("sqrt", as_expr(a))


def var(name: str) -> Variable:
    return Variable(name)


# --- parser ---

FUNCTION_NAMES = ("sin", "cos", "exp", "sqrt")


def _fold(tokens) -> FieldExpr:
    items = list(tokens)
    node = items[0]
    for op, rhs in zip(items[1::2], items[2::2]):
        node = _BUILDERS[op](node, rhs)
    return node


def _factor(tokens) -> FieldExpr:
    items = list(tokens)
    negate = isinstance(items[0], str) and items[0] == "-"
    if negate:
        items = items[1:]
    node = items[0]
    if len(items) > 1:
        node = power(node, int(items[1]))
    return neg(node) if negate else node


@lru_cache(maxsize=32)
def _grammar(allowed: frozenset[str] | None) -> pp.ParserElement:
    lpar, rpar = pp.Suppress("("), pp.Suppress(")")
    number = pp.Regex(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?").set_name("number")
    number.set_parse_action(lambda t: Constant(float(t[0])))
    func_kw = pp.MatchFirst([pp.Keyword(name) for name in FUNCTION_NAMES])
    ident = pp.Word(pp.alphas + "_", pp.alphanums + "_").set_name("identifier")

    def _variable(s, loc, toks):
        name = toks[0]
        if allowed is not None and name not in allowed:
            raise pp.ParseFatalException(s, loc, f"unknown coordinate {name!r}")
        return Variable(name)

    expr = pp.Forward()
    call = func_kw + lpar + expr + rpar
    call.set_parse_action(lambda t: function(t[0], t[1]))
    variable = (~func_kw + ident).set_parse_action(_variable)
    base = number | call | variable | (lpar + expr + rpar)
    factor = pp.Opt(pp.Literal("-")) + base + pp.Opt(pp.Suppress("^") + pp.Word(pp.nums))
    factor.set_parse_action(_factor)
    term = factor + pp.ZeroOrMore(pp.one_of("* /") + factor)
    term.set_parse_action(_fold)
    expr <<= term + pp.ZeroOrMore(pp.one_of("+ -") + term)
    expr.set_parse_action(_fold)
    return expr


def parse_expression(text: str, variables: Collection[str] | None = None) -> FieldExpr:
    """Parse `text` into a FieldExpr.

    Args:
        text: Expression in the coefficient grammar.
        variables: Coordinate names allowed as identifiers (None allows any).

    Raises:
        ExpressionSyntaxError: with the 1-based column of the offending token.
    """
    allowed = None if variables is None else frozenset(variables)
    try:
        result = _grammar(allowed).parse_string(text, parse_all=True)
    except pp.ParseBaseException as exc:
        raise ExpressionSyntaxError(text, exc.col, exc.msg) from None
    except DomainError as exc:
        raise ExpressionSyntaxError(text, 1, str(exc)) from None
    return result[0]
