"""Scalar expression trees over indexed variables ``x1, x2, ...``.

Two flavors share one tree type.  *Exact* trees carry rational constants and
are decided by polynomial normal form; *float* trees may also use ``sin``,
``cos`` and ``exp`` and are compared by sampling.  Integer constants are
flavor-neutral, which lets derivative rules build ``Const(2)`` without knowing
the flavor.

Trees are immutable and may share subtrees (substitution reuses the inserted
expressions), so traversals memoise on node identity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from cdiff.poly import PolyNF

Scalar = Union[int, Fraction, float]


class Flavor(str, Enum):
    EXACT = "exact"
    FLOAT = "float"


class Semiring(str, Enum):
    RAT = "rat"
    NAT = "nat"


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"syntax error at position {pos}: {msg}")
        self.pos = pos


class VariableRangeError(ExprError):
    pass


class FlavorError(ExprError):
    pass


class NonFiniteError(ArithmeticError):
    pass


# nodes -----------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Scalar


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Add:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Neg:
    arg: Expr


@dataclass(frozen=True)
class Pow:
    base: Expr
    exp: int


@dataclass(frozen=True)
class Prim:
    name: str
    arg: Expr


Expr = Union[Const, Var, Add, Mul, Neg, Pow, Prim]

PRIMS = ("sin", "cos", "exp")
ZERO = Const(0)
ONE = Const(1)


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


# Smart constructors.  They fold additive zeros and multiplicative units only,
# which keeps derivative trees small without further simplification.

def add(a: Expr, b: Expr) -> Expr:
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return Add(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    return Mul(a, b)


def neg(a: Expr) -> Expr:
    if is_zero(a):
        return ZERO
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if is_zero(a):
        return ZERO
    return Pow(a, k)


def sum_exprs(items: Sequence[Expr]) -> Expr:
    """Balanced sum, so long sums do not produce deep trees."""
    items = [e for e in items if not is_zero(e)]
    if not items:
        return ZERO
    while len(items) > 1:
        nxt = [add(items[i], items[i + 1]) for i in range(0, len(items) - 1, 2)]
        if len(items) % 2:
            nxt.append(items[-1])
        items = nxt
    return items[0]


def children(e: Expr) -> tuple[Expr, ...]:
    if isinstance(e, (Add, Mul)):
        return (e.left, e.right)
    if isinstance(e, (Neg, Prim)):
        return (e.arg,)
    if isinstance(e, Pow):
        return (e.base,)
    return ()


def _walk(e: Expr):
    """Yield every distinct node of a DAG once."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        yield node
        stack.extend(children(node))


def max_var(e: Expr) -> int:
    return max((n.index for n in _walk(e) if isinstance(n, Var)), default=0)


def tree_flavor(e: Expr) -> Flavor | None:
    """Flavor forced by the tree's contents, or None for neutral trees."""
    exact = floating = False
    for n in _walk(e):
        if isinstance(n, Prim):
            floating = True
        elif isinstance(n, Const):
            if isinstance(n.value, float):
                floating = True
            elif isinstance(n.value, Fraction):
                exact = True
    if exact and floating:
        raise FlavorError("tree mixes exact and float constants")
    if floating:
        return Flavor.FLOAT
    if exact:
        return Flavor.EXACT
    return None


def has_neg(e: Expr) -> bool:
    for n in _walk(e):
        if isinstance(n, Neg):
            return True
        if isinstance(n, Const) and n.value < 0:
            return True
    return False


# parsing ---------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<rat>\d+/\d+)"
    r"|(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)"
    r"|(?P<func>sin|cos|exp)"
    r"|(?P<op>[-+*^()])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {text[start]!r}", start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, n_vars: int, flavor: Flavor, semiring: Semiring):
        self.toks = _tokenize(text)
        self.i = 0
        self.n_vars = n_vars
        self.flavor = Flavor(flavor)
        self.nat = Semiring(semiring) is Semiring.NAT

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str) -> None:
        kind, val, pos = self.take()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def _forbid_in_nat(self, what: str, pos: int) -> None:
        if self.nat:
            raise FlavorError(f"{what} not allowed in the natural-number semiring (position {pos})")

    def parse(self) -> Expr:
        e = self.expression()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos)
        return e

    def expression(self) -> Expr:
        kind, val, pos = self.peek()
        negate = False
        if kind == "op" and val == "-":
            self._forbid_in_nat("'-'", pos)
            self.take()
            negate = True
        e = self.term()
        if negate:
            e = Neg(e)
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                rhs = self.term()
                if val == "-":
                    self._forbid_in_nat("'-'", pos)
                    rhs = Neg(rhs)
                e = Add(e, rhs)
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            e = Mul(e, self.factor())
        return e

    def factor(self) -> Expr:
        b = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                raise ExprSyntaxError("exponent must be a nonnegative integer", pos)
            return Pow(b, int(val))
        return b

    def base(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "rat":
            p, q = (int(s) for s in val.split("/"))
            if q == 0:
                raise ExprSyntaxError("zero denominator", pos)
            return self._number(Fraction(p, q), pos)
        if kind == "num":
            return self._number(Fraction(val), pos)
        if kind == "var":
            idx = int(val[1:])
            if idx < 1 or idx > self.n_vars:
                raise VariableRangeError(
                    f"variable {val} out of range 1..{self.n_vars} (position {pos})"
                )
            return Var(idx)
        if kind == "func":
            if self.flavor is Flavor.EXACT:
                raise FlavorError(f"{val} is not available in exact flavor (position {pos})")
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Prim(val, arg)
        if kind == "op" and val == "(":
            e = self.expression()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos)

    def _number(self, q: Fraction, pos: int) -> Const:
        if self.flavor is Flavor.FLOAT:
            return Const(float(q))
        if self.nat and q.denominator != 1:
            raise FlavorError(f"non-integer constant in the natural-number semiring (position {pos})")
        return Const(q)


def parse_expr(
    text: str,
    n_vars: int,
    flavor: Flavor | str = Flavor.EXACT,
    semiring: Semiring | str = Semiring.RAT,
) -> Expr:
    """Parse ``text`` into an expression over ``x1..x{n_vars}``.

    A leading unary minus is accepted in addition to binary ``+``/``-``.
    """
    if Flavor(flavor) is Flavor.FLOAT and Semiring(semiring) is Semiring.NAT:
        raise FlavorError("the natural-number semiring is exact only")
    return _Parser(text, n_vars, flavor, semiring).parse()


# printing --------------------------------------------------------------


def format_scalar(v: Scalar) -> str:
    if isinstance(v, float):
        if not math.isfinite(v):
            raise NonFiniteError(f"cannot print non-finite constant {v}")
        return repr(v)
    q = Fraction(v)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def _flatten(e: Expr, cls: type) -> list[Expr]:
    out, stack = [], [e]
    while stack:
        node = stack.pop()
        if isinstance(node, cls):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def _split_sign(term: Expr) -> tuple[bool, Expr]:
    """Pull a leading negative sign out of a summand."""
    if isinstance(term, Neg):
        return True, term.arg
    if isinstance(term, Const) and term.value < 0:
        return True, Const(-term.value)
    if isinstance(term, Mul):
        factors = _flatten(term, Mul)
        lead = factors[0]
        if isinstance(lead, Const) and lead.value < 0:
            rest = factors[1:]
            if lead.value != -1:
                rest = [Const(-lead.value)] + rest
            out = rest[0]
            for f in rest[1:]:
                out = Mul(out, f)
            return True, out
    return False, term


def format_expr(e: Expr) -> str:
    """Render ``e`` in the textual grammar accepted by :func:`parse_expr`."""
    return _fmt(e, 0)


def _fmt(e: Expr, prec: int) -> str:
    # prec: 0 sum context, 1 product factor, 2 power base
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Const):
        s = format_scalar(e.value)
        if (e.value < 0 and prec > 0) or (prec >= 2 and not s.isdigit()):
            return f"({s})"
        return s
    if isinstance(e, Prim):
        return f"{e.name}({_fmt(e.arg, 0)})"
    if isinstance(e, Pow):
        s = f"{_fmt(e.base, 2)}^{e.exp}"
        return f"({s})" if prec >= 2 else s
    if isinstance(e, Mul):
        negative, body = _split_sign(e)
        if negative:
            s = f"-{_fmt(body, 1)}"
            return f"({s})" if prec >= 1 else s
        s = "*".join(_fmt(f, 1) for f in _flatten(e, Mul))
        return f"({s})" if prec >= 2 else s
    if isinstance(e, (Add, Neg)):
        terms = _flatten(e, Add)
        parts = []
        for k, t in enumerate(terms):
            negative, body = _split_sign(t)
            body_s = _fmt(body, 1)
            if k == 0:
                parts.append(f"-{body_s}" if negative else body_s)
            else:
                parts.append(f" - {body_s}" if negative else f" + {body_s}")
        s = "".join(parts)
        return f"({s})" if prec >= 1 else s
    raise TypeError(f"not an expression: {e!r}")


# evaluation ------------------------------------------------------------


def _point_flavor(point: Sequence) -> Flavor:
    return Flavor.FLOAT if any(isinstance(v, float) for v in point) else Flavor.EXACT


_FLOAT_PRIMS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}
_NP_PRIMS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def eval_expr(e: Expr, point: Sequence[Scalar], flavor: Flavor | str | None = None) -> Scalar:
    """Evaluate ``e`` at ``point`` (``point[i-1]`` is the value of ``x_i``).

    Unless ``flavor`` is given, the point's element types pick it: any float
    means float arithmetic, otherwise exact rational arithmetic.
    """
    if max_var(e) > len(point):
        raise VariableRangeError(
            f"expression uses x{max_var(e)} but the point has {len(point)} coordinates"
        )
    flavor = _point_flavor(point) if flavor is None else Flavor(flavor)
    if flavor is Flavor.EXACT:
        if tree_flavor(e) is Flavor.FLOAT:
            raise FlavorError("float expression evaluated at an exact point")
        pt = [Fraction(v) for v in point]
    else:
        pt = [float(v) for v in point]
    memo: dict[int, Scalar] = {}
    try:
        value = _eval(e, pt, memo)
    except OverflowError as exc:
        raise NonFiniteError(str(exc)) from exc
    if isinstance(value, float) and not math.isfinite(value):
        raise NonFiniteError(f"evaluation produced {value}")
    return value


def _eval(e: Expr, pt: list, memo: dict[int, Scalar]) -> Scalar:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        v = e.value
    elif isinstance(e, Var):
        v = pt[e.index - 1]
    elif isinstance(e, Add):
        v = _eval(e.left, pt, memo) + _eval(e.right, pt, memo)
    elif isinstance(e, Mul):
        v = _eval(e.left, pt, memo) * _eval(e.right, pt, memo)
    elif isinstance(e, Neg):
        v = -_eval(e.arg, pt, memo)
    elif isinstance(e, Pow):
        v = _eval(e.base, pt, memo) ** e.exp
    elif isinstance(e, Prim):
        v = _FLOAT_PRIMS[e.name](float(_eval(e.arg, pt, memo)))
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = v
    return v


def eval_batch(e: Expr, X: np.ndarray, memo: dict | None = None) -> np.ndarray:
    """Evaluate a float tree at many points; ``X`` has shape (n_vars, samples).

    Non-finite results are returned as-is; callers decide how to report them.
    """
    memo = {} if memo is None else memo
    with np.errstate(all="ignore"):
        return np.broadcast_to(_eval_np(e, X, memo), X.shape[1:]).astype(float)


def _eval_np(e: Expr, X: np.ndarray, memo: dict) -> np.ndarray:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        v = np.full(X.shape[1:], float(e.value))
    elif isinstance(e, Var):
        v = X[e.index - 1]
    elif isinstance(e, Add):
        v = _eval_np(e.left, X, memo) + _eval_np(e.right, X, memo)
    elif isinstance(e, Mul):
        v = _eval_np(e.left, X, memo) * _eval_np(e.right, X, memo)
    elif isinstance(e, Neg):
        v = -_eval_np(e.arg, X, memo)
    elif isinstance(e, Pow):
        v = _eval_np(e.base, X, memo) ** e.exp
    elif isinstance(e, Prim):
        v = _NP_PRIMS[e.name](_eval_np(e.arg, X, memo))
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = v
    return v


# substitution and differentiation -------------------------------------


def substitute(e: Expr, repl: Sequence[Expr], memo: dict | None = None) -> Expr:
    """Replace every ``x_i`` by ``repl[i-1]`` simultaneously."""
    memo = {} if memo is None else memo
    return _subst(e, repl, memo)


def _subst(e: Expr, repl: Sequence[Expr], memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        out = e
    elif isinstance(e, Var):
        if e.index > len(repl):
            raise VariableRangeError(f"no substitute for x{e.index}")
        out = repl[e.index - 1]
    elif isinstance(e, Add):
        out = add(_subst(e.left, repl, memo), _subst(e.right, repl, memo))
    elif isinstance(e, Mul):
        out = mul(_subst(e.left, repl, memo), _subst(e.right, repl, memo))
    elif isinstance(e, Neg):
        out = neg(_subst(e.arg, repl, memo))
    elif isinstance(e, Pow):
        out = power(_subst(e.base, repl, memo), e.exp)
    elif isinstance(e, Prim):
        out = Prim(e.name, _subst(e.arg, repl, memo))
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = out
    return out


def partial_derivative(e: Expr, i: int, flavor: Flavor | str | None = None) -> Expr:
    """Symbolic partial derivative of ``e`` with respect to ``x_i``."""
    if i < 1:
        raise VariableRangeError(f"variable index must be >= 1, got {i}")
    exact = flavor is not None and Flavor(flavor) is Flavor.EXACT
    return _diff(e, i, exact, {})


def _diff(e: Expr, i: int, exact: bool, memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        out = ZERO
    elif isinstance(e, Var):
        out = ONE if e.index == i else ZERO
    elif isinstance(e, Add):
        out = add(_diff(e.left, i, exact, memo), _diff(e.right, i, exact, memo))
    elif isinstance(e, Mul):
        out = add(
            mul(_diff(e.left, i, exact, memo), e.right),
            mul(e.left, _diff(e.right, i, exact, memo)),
        )
    elif isinstance(e, Neg):
        out = neg(_diff(e.arg, i, exact, memo))
    elif isinstance(e, Pow):
        inner = _diff(e.base, i, exact, memo)
        if e.exp == 0 or is_zero(inner):
            out = ZERO
        else:
            out = mul(mul(Const(e.exp), power(e.base, e.exp - 1)), inner)
    elif isinstance(e, Prim):
        if exact:
            raise FlavorError(f"{e.name} cannot be differentiated in exact flavor")
        inner = _diff(e.arg, i, exact, memo)
        if is_zero(inner):
            out = ZERO
        elif e.name == "sin":
            out = mul(Prim("cos", e.arg), inner)
        elif e.name == "cos":
            out = mul(neg(Prim("sin", e.arg)), inner)
        elif e.name == "exp":
            out = mul(e, inner)
        else:
            raise ExprError(f"unknown primitive {e.name}")
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = out
    return out


# normal form -----------------------------------------------------------


def poly_normal_form(e: Expr, memo: dict | None = None) -> PolyNF:
    """Expand an exact, transcendental-free tree into :class:`PolyNF`."""
    memo = {} if memo is None else memo
    return _to_poly(e, memo)


def _to_poly(e: Expr, memo: dict) -> PolyNF:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        if isinstance(e.value, float):
            raise FlavorError("float constant in an exact expression")
        out = PolyNF.const(e.value)
    elif isinstance(e, Var):
        out = PolyNF.var(e.index)
    elif isinstance(e, Add):
        out = _to_poly(e.left, memo) + _to_poly(e.right, memo)
    elif isinstance(e, Mul):
        out = _to_poly(e.left, memo) * _to_poly(e.right, memo)
    elif isinstance(e, Neg):
        out = -_to_poly(e.arg, memo)
    elif isinstance(e, Pow):
        out = _to_poly(e.base, memo) ** e.exp
    elif isinstance(e, Prim):
        raise FlavorError(f"{e.name} has no polynomial normal form")
    else:
        raise TypeError(f"not an expression: {e!r}")
    memo[key] = out
    return out


def from_poly(p: PolyNF) -> Expr:
    """Canonical tree for a normal form; equal normal forms give equal trees."""
    terms = []
    for mono, c in p.sorted_terms():
        factors: list[Expr] = [Var(v) if k == 1 else Pow(Var(v), k) for v, k in mono]
        if c != 1 or not factors:
            factors.insert(0, Const(c.numerator if c.denominator == 1 else c))
        t = factors[0]
        for f in factors[1:]:
            t = Mul(t, f)
        terms.append(t)
    if not terms:
        return ZERO
    return sum_exprs(terms)


# equality --------------------------------------------------------------


@dataclass(frozen=True)
class EqConfig:
    samples: int = 100
    box: tuple[float, float] = (-2.0, 2.0)
    seed: int = 0xCD1FF
    tol_abs: float = 1e-9
    tol_rel: float = 1e-9


DEFAULT_EQ = EqConfig()


def sample_points(n_vars: int, cfg: EqConfig = DEFAULT_EQ) -> np.ndarray:
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.box
    return rng.uniform(lo, hi, size=(n_vars, cfg.samples))


def close_mask(va: np.ndarray, vb: np.ndarray, cfg: EqConfig = DEFAULT_EQ) -> np.ndarray:
    """Per-sample tolerance test; non-finite values never compare close."""
    with np.errstate(all="ignore"):
        ok = np.abs(va - vb) <= cfg.tol_abs + cfg.tol_rel * np.maximum(np.abs(va), np.abs(vb))
    return ok & np.isfinite(va) & np.isfinite(vb)


def joint_flavor(*exprs: Expr) -> Flavor:
    flavors = {tree_flavor(e) for e in exprs} - {None}
    if len(flavors) > 1:
        raise FlavorError("cannot compare exact and float expressions")
    return flavors.pop() if flavors else Flavor.EXACT


def expr_equal(
    a: Expr,
    b: Expr,
    cfg: EqConfig = DEFAULT_EQ,
    flavor: Flavor | str | None = None,
) -> bool:
    """Decide ``a == b`` as functions.

    Exact flavor compares normal forms (complete for polynomials).  Float
    flavor compares values at ``cfg.samples`` seeded points of ``cfg.box``, so
    it can accept functions that differ off the sample.
    """
    inferred = joint_flavor(a, b)
    flavor = inferred if flavor is None else Flavor(flavor)
    if flavor is Flavor.EXACT:
        if inferred is Flavor.FLOAT:
            raise FlavorError("float expression compared in exact flavor")
        return poly_normal_form(a) == poly_normal_form(b)
    n = max(max_var(a), max_var(b))
    X = sample_points(n, cfg)
    return bool(np.all(close_mask(eval_batch(a, X), eval_batch(b, X), cfg)))
