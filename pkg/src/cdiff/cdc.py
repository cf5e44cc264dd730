"""Maps between Euclidean spaces and the differential combinator on them.

An object is its dimension (``int``); the terminal object is ``0`` and a
product has the sum of the dimensions.  A :class:`Morph` ``n -> m`` is a tuple
of ``m`` expressions in ``x1..xn``.  For a map on a product ``n1 + n2`` the
first block is ``x1..x{n1}`` and the second ``x{n1+1}..x{n1+n2}``.

``D[f]`` takes the point in its first block and the direction in its second.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Literal, Sequence

import numpy as np

from cdiff.expr import (
    DEFAULT_EQ,
    ZERO,
    Add,
    Const,
    EqConfig,
    Expr,
    Flavor,
    Mul,
    Neg,
    Pow,
    Prim,
    Semiring,
    Var,
    add,
    children,
    close_mask,
    eval_batch,
    eval_expr,
    format_expr,
    from_poly,
    max_var,
    mul,
    parse_expr,
    partial_derivative,
    poly_normal_form,
    sample_points,
    substitute,
    sum_exprs,
)
from cdiff.matrix import LinMorph
from cdiff.poly import PolyNF

Split = tuple[int, int]
Which = Literal["first", "second"]


class ObjectMismatch(ValueError):
    pass


def _floatify(e: Expr, memo: dict) -> Expr:
    key = id(e)
    if key in memo:
        return memo[key]
    if isinstance(e, Const):
        out = Const(float(e.value)) if isinstance(e.value, Fraction) else e
    else:
        kids = [_floatify(c, memo) for c in children(e)]
        out = e if all(k is c for k, c in zip(kids, children(e))) else _rebuild(e, kids)
    memo[key] = out
    return out


def _rebuild(e: Expr, kids: list[Expr]) -> Expr:
    if isinstance(e, Add):
        return Add(*kids)
    if isinstance(e, Mul):
        return Mul(*kids)
    if isinstance(e, Neg):
        return Neg(kids[0])
    if isinstance(e, Pow):
        return Pow(kids[0], e.exp)
    if isinstance(e, Prim):
        return Prim(e.name, kids[0])
    raise TypeError(e)


@dataclass(frozen=True, eq=False)
class Morph:
    """A map ``R^dom -> R^cod`` given by ``cod`` coordinate expressions.

    Exact morphisms are stored in polynomial normal form, so their trees are
    canonical and ``polys`` is available.  Float trees are kept as built,
    apart from converting stray rational constants to floats.
    """

    dom: int
    cod: int
    exprs: tuple[Expr, ...]
    flavor: Flavor = Flavor.EXACT

    def __post_init__(self):
        exprs = tuple(self.exprs)
        flavor = Flavor(self.flavor)
        if self.dom < 0 or self.cod < 0:
            raise ObjectMismatch("dimensions must be nonnegative")
        if len(exprs) != self.cod:
            raise ObjectMismatch(f"codomain {self.cod} but {len(exprs)} expressions")
        if flavor is Flavor.EXACT:
            memo: dict = {}
            polys = tuple(poly_normal_form(e, memo) for e in exprs)
            top = max((p.max_var() for p in polys), default=0)
            exprs = tuple(from_poly(p) for p in polys)
        else:
            memo = {}
            exprs = tuple(_floatify(e, memo) for e in exprs)
            polys = None
            top = max((max_var(e) for e in exprs), default=0)
        if top > self.dom:
            raise ObjectMismatch(f"expression uses x{top} but the domain has dimension {self.dom}")
        object.__setattr__(self, "exprs", exprs)
        object.__setattr__(self, "flavor", flavor)
        object.__setattr__(self, "polys", polys)

    @classmethod
    def from_polys(cls, dom: int, polys: Sequence[PolyNF]) -> Morph:
        """Exact morphism straight from normal forms (skips re-expansion)."""
        polys = tuple(polys)
        top = max((p.max_var() for p in polys), default=0)
        if top > dom:
            raise ObjectMismatch(f"expression uses x{top} but the domain has dimension {dom}")
        m = object.__new__(cls)
        for name, value in (("dom", dom), ("cod", len(polys)), ("flavor", Flavor.EXACT),
                            ("exprs", tuple(from_poly(p) for p in polys)), ("polys", polys)):
            object.__setattr__(m, name, value)
        return m

    # operator sugar: ``g @ f`` is composition, ``f + g`` the hom-set sum
    def __matmul__(self, other: Morph) -> Morph:
        return compose(self, other)

    def __add__(self, other: Morph) -> Morph:
        return add_morphs(self, other)

    def __call__(self, *point):
        if len(point) != self.dom:
            raise ObjectMismatch(f"expected {self.dom} coordinates, got {len(point)}")
        return tuple(eval_expr(e, point, self.flavor) for e in self.exprs)

    def __repr__(self) -> str:
        body = ", ".join(format_expr(e) for e in self.exprs)
        return f"Morph({self.dom}->{self.cod}, {self.flavor.value}: ({body}))"

    def texts(self) -> list[str]:
        return [format_expr(e) for e in self.exprs]


def as_float(f: Morph) -> Morph:
    if f.flavor is Flavor.FLOAT:
        return f
    return Morph(f.dom, f.cod, f.exprs, Flavor.FLOAT)


def _unify(*fs: Morph) -> tuple[Morph, ...]:
    if all(f.flavor is fs[0].flavor for f in fs):
        return fs
    return tuple(as_float(f) for f in fs)


def from_texts(
    dom: int,
    texts: Sequence[str],
    flavor: Flavor | str = Flavor.EXACT,
    semiring: Semiring | str = Semiring.RAT,
) -> Morph:
    flavor = Flavor(flavor)
    return Morph(dom, len(texts), tuple(parse_expr(t, dom, flavor, semiring) for t in texts), flavor)


# structure maps ---------------------------------------------------------


def identity(n: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    return Morph(n, n, tuple(Var(i) for i in range(1, n + 1)), flavor)


def proj0(n1: int, n2: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    return Morph(n1 + n2, n1, tuple(Var(i) for i in range(1, n1 + 1)), flavor)


def proj1(n1: int, n2: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    return Morph(n1 + n2, n2, tuple(Var(n1 + i) for i in range(1, n2 + 1)), flavor)


def zero_morph(dom: int, cod: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    return Morph(dom, cod, (ZERO,) * cod, flavor)


def bang(n: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """The unique map into the terminal object."""
    return Morph(n, 0, (), flavor)


def pair(*fs: Morph) -> Morph:
    """Tupling ``<f, g, ...>``; all components share a domain."""
    if not fs:
        raise ObjectMismatch("pairing needs at least one map")
    fs = _unify(*fs)
    dom = fs[0].dom
    if any(f.dom != dom for f in fs):
        raise ObjectMismatch(f"pairing maps with domains {[f.dom for f in fs]}")
    if fs[0].flavor is Flavor.EXACT:
        return Morph.from_polys(dom, [p for f in fs for p in f.polys])
    exprs = tuple(e for f in fs for e in f.exprs)
    return Morph(dom, len(exprs), exprs, fs[0].flavor)


def inj0(n1: int, n2: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``<1, 0> : A -> A x B``."""
    return pair(identity(n1, flavor), zero_morph(n1, n2, flavor))


def inj1(n1: int, n2: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``<0, 1> : B -> A x B``."""
    return pair(zero_morph(n2, n1, flavor), identity(n2, flavor))


def compose(g: Morph, f: Morph) -> Morph:
    """``g . f`` by simultaneous substitution of ``f`` into ``g``."""
    if f.cod != g.dom:
        raise ObjectMismatch(f"cannot compose {g.dom}->{g.cod} after {f.dom}->{f.cod}")
    g, f = _unify(g, f)
    if g.flavor is Flavor.EXACT:
        return Morph.from_polys(f.dom, [p.substitute(f.polys) for p in g.polys])
    memo: dict = {}
    return Morph(f.dom, g.cod, tuple(substitute(e, f.exprs, memo) for e in g.exprs), g.flavor)


def chain(*fs: Morph) -> Morph:
    """``chain(h, g, f) == h . g . f``."""
    out = fs[-1]
    for g in reversed(fs[:-1]):
        out = compose(g, out)
    return out


def add_morphs(f: Morph, g: Morph) -> Morph:
    if (f.dom, f.cod) != (g.dom, g.cod):
        raise ObjectMismatch(f"cannot add {f.dom}->{f.cod} and {g.dom}->{g.cod}")
    f, g = _unify(f, g)
    if f.flavor is Flavor.EXACT:
        return Morph.from_polys(f.dom, [p + q for p, q in zip(f.polys, g.polys)])
    return Morph(f.dom, f.cod, tuple(add(a, b) for a, b in zip(f.exprs, g.exprs)), f.flavor)


def product(f: Morph, g: Morph) -> Morph:
    """``f x g = <f . pi0, g . pi1>``."""
    f, g = _unify(f, g)
    return pair(compose(f, proj0(f.dom, g.dom, f.flavor)), compose(g, proj1(f.dom, g.dom, f.flavor)))


def constant(dom: int, values: Sequence, flavor: Flavor = Flavor.EXACT) -> Morph:
    return Morph(dom, len(values), tuple(Const(v) for v in values), flavor)


def matrix_morph(a: LinMorph, flavor: Flavor = Flavor.EXACT) -> Morph:
    """The linear map ``x |-> a x``."""
    exprs = tuple(
        sum_exprs([mul(Const(a.entries[j][i]), Var(i + 1)) for i in range(a.cols)])
        for j in range(a.rows)
    )
    return Morph(a.cols, a.rows, exprs, flavor)


# equality ---------------------------------------------------------------


def find_mismatch(f: Morph, g: Morph, cfg: EqConfig = DEFAULT_EQ) -> dict | None:
    """None when ``f`` and ``g`` are equal, else a witness description."""
    if (f.dom, f.cod) != (g.dom, g.cod):
        return {"reason": f"types differ: {f.dom}->{f.cod} vs {g.dom}->{g.cod}"}
    f, g = _unify(f, g)
    if f.flavor is Flavor.EXACT:
        for j, (p, q) in enumerate(zip(f.polys, g.polys)):
            if p != q:
                return {
                    "component": j + 1,
                    "lhs": format_expr(f.exprs[j]),
                    "rhs": format_expr(g.exprs[j]),
                    "point": _exact_witness(p - q, f.dom),
                }
        return None
    X = sample_points(f.dom, cfg)
    ma, mb = {}, {}
    for j, (a, b) in enumerate(zip(f.exprs, g.exprs)):
        va, vb = eval_batch(a, X, ma), eval_batch(b, X, mb)
        ok = close_mask(va, vb, cfg)
        if not ok.all():
            with np.errstate(all="ignore"):
                dev = np.where(np.isfinite(va - vb), np.abs(va - vb), np.inf)
            k = int(np.argmax(np.where(ok, -1.0, dev)))
            return {
                "component": j + 1,
                "lhs": format_expr(a),
                "rhs": format_expr(b),
                "point": [float(v) for v in X[:, k]],
                "deviation": float(dev[k]),
            }
    return None


def _exact_witness(diff: PolyNF, dom: int) -> list[str]:
    # a nonzero polynomial is nonzero at most random integer points
    rng = np.random.default_rng(0)
    for _ in range(100):
        pt = [int(v) for v in rng.integers(-9, 10, size=dom)]
        if diff.evaluate(pt) != 0:
            return [str(v) for v in pt]
    return []


def morph_equal(f: Morph, g: Morph, cfg: EqConfig = DEFAULT_EQ) -> bool:
    return find_mismatch(f, g, cfg) is None


# differentiation ----------------------------------------------------------


def differentiate(f: Morph) -> Morph:
    """``D[f] : n + n -> m``, ``D[f]_j = sum_i (df_j/dx_i)(x) * x_{n+i}``."""
    n = f.dom
    if f.flavor is Flavor.EXACT:
        polys = tuple(
            sum((p.partial(i) * PolyNF.var(n + i) for i in range(1, n + 1)), PolyNF())
            for p in f.polys
        )
        return Morph.from_polys(2 * n, polys)
    exprs = tuple(
        sum_exprs([mul(partial_derivative(e, i, f.flavor), Var(n + i)) for i in range(1, n + 1)])
        for e in f.exprs
    )
    return Morph(2 * n, f.cod, exprs, f.flavor)


Differential = Callable[[Morph], Morph]


def _check_split(f: Morph, split: Split) -> None:
    n1, n2 = split
    if n1 < 0 or n2 < 0 or n1 + n2 != f.dom:
        raise ObjectMismatch(f"split {split} does not match domain dimension {f.dom}")


def partial_differentiate(f: Morph, split: Split, which: Which = "second",
                          d: Differential = differentiate) -> Morph:
    """Partial derivative of ``f : A x B -> C`` in one argument block.

    The result has domain ``(A x B) x X`` where ``X`` is the chosen block:
    first block gives ``D[f] . <<a, b>, <c, 0>>``, second gives
    ``D[f] . <<a, b>, <0, c>>``.
    """
    _check_split(f, split)
    n1, n2 = split
    k = n1 if which == "first" else n2
    fl = f.flavor
    ab = proj0(n1 + n2, k, fl)
    c = proj1(n1 + n2, k, fl)
    zero = lambda cod: zero_morph(n1 + n2 + k, cod, fl)  # noqa: E731
    direction = pair(c, zero(n2)) if which == "first" else pair(zero(n1), c)
    return compose(d(f), pair(ab, direction))


def is_linear(f: Morph, cfg: EqConfig = DEFAULT_EQ, d: Differential = differentiate) -> bool:
    """``D[f] . <a, b> = f . b``, checked at the generic point ``<pi0, pi1>``."""
    n = f.dom
    return morph_equal(d(f), compose(f, proj1(n, n, f.flavor)), cfg)


def linearity_witness(f: Morph, split: Split, which: Which = "second",
                      cfg: EqConfig = DEFAULT_EQ, d: Differential = differentiate) -> dict | None:
    """Mismatch in the defining equation of linearity in one block, if any.

    Second block: ``D[f] . <<a, b>, <0, c>> = f . <a, c>``; first block:
    ``D[f] . <<a, b>, <c, 0>> = f . <c, b>``, with ``a, b, c`` generic.
    """
    _check_split(f, split)
    n1, n2 = split
    k = n1 if which == "first" else n2
    fl = f.flavor
    lhs = partial_differentiate(f, split, which, d)
    a = compose(proj0(n1, n2, fl), proj0(n1 + n2, k, fl))
    b = compose(proj1(n1, n2, fl), proj0(n1 + n2, k, fl))
    c = proj1(n1 + n2, k, fl)
    rhs = compose(f, pair(a, c) if which == "second" else pair(c, b))
    return find_mismatch(lhs, rhs, cfg)


def is_linear_in(f: Morph, split: Split, which: Which = "second",
                 cfg: EqConfig = DEFAULT_EQ, d: Differential = differentiate) -> bool:
    return linearity_witness(f, split, which, cfg, d) is None


def is_bilinear(f: Morph, split: Split, cfg: EqConfig = DEFAULT_EQ,
                d: Differential = differentiate) -> bool:
    return is_linear_in(f, split, "first", cfg, d) and is_linear_in(f, split, "second", cfg, d)


def linearize_partial(f: Morph, split: Split, d: Differential = differentiate) -> Morph:
    """Linearization in context: ``D[f] . <<pi0, 0>, <0, pi1>>``."""
    _check_split(f, split)
    n1, n2 = split
    fl = f.flavor
    n = n1 + n2
    point = pair(proj0(n1, n2, fl), zero_morph(n, n2, fl))
    direction = pair(zero_morph(n, n1, fl), proj1(n1, n2, fl))
    return compose(d(f), pair(point, direction))


def biproduct_diff(a: LinMorph | Morph) -> Morph:
    """Derivative in a category with biproducts: ``D[f] = f . pi1``."""
    f = matrix_morph(a) if isinstance(a, LinMorph) else a
    return compose(f, proj1(f.dom, f.dom, f.flavor))
