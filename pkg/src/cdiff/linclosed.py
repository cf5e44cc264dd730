"""Internal linear homs, linear curry, Jacobians, transposes and gradients.

The internal linear hom ``L(A, B)`` for ``A = R^n`` and ``B = R^m`` is
``R^(n*m)``, holding an ``m x n`` matrix in row-major order: coordinate
``j*n + i`` (0-based) is the entry in row ``j``, column ``i``.  Nested homs
``L(A, L(B, C))`` use the same rule at both levels.

Every construction here is built from :func:`eval_linear`, :func:`linear_curry`
and the differential combinators, so the categorical definitions can be
checked against matrix arithmetic.
"""

from __future__ import annotations

from typing import Callable, Literal, Sequence

from cdiff.cdc import (
    Differential,
    Morph,
    ObjectMismatch,
    Split,
    _check_split,
    compose,
    differentiate,
    identity,
    inj0,
    inj1,
    linearity_witness,
    matrix_morph,
    pair,
    product,
    proj0,
    proj1,
)
from cdiff.expr import (
    DEFAULT_EQ,
    Const,
    EqConfig,
    Flavor,
    Var,
    mul,
    partial_derivative,
    substitute,
    sum_exprs,
)
from cdiff.matrix import LinMorph
from cdiff.poly import PolyNF

Transpose = Callable[..., Morph]


class CurryOfNonlinear(ValueError):
    """Linear curry requested for a map that is not linear in its second block."""

    def __init__(self, witness: dict):
        super().__init__(f"map is not linear in its second argument: {witness}")
        self.witness = witness


def proj_block(dims: Sequence[int], idx: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """Projection of ``A_0 x ... x A_k`` onto block ``idx``."""
    start = sum(dims[:idx])
    return Morph(sum(dims), dims[idx], tuple(Var(start + i + 1) for i in range(dims[idx])), flavor)


def eval_linear(n: int, m: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``eps : L(R^n, R^m) x R^n -> R^m``, lay out and multiply."""
    nm = n * m
    exprs = tuple(
        sum_exprs([mul(Var(j * n + i + 1), Var(nm + i + 1)) for i in range(n)]) for j in range(m)
    )
    return Morph(nm + n, m, exprs, flavor)


def linear_curry(f: Morph, split: Split, *, check: bool = True, cfg: EqConfig = DEFAULT_EQ,
                 d: Differential = differentiate) -> Morph:
    """The unique ``g : A -> L(B, C)`` with ``eps . (g x 1) = f``.

    Computed by probing the second block with the canonical basis vectors.
    With ``check`` the defining equation of linearity in the second block is
    verified first and :class:`CurryOfNonlinear` raised on failure.
    """
    _check_split(f, split)
    n, k = split
    if check:
        witness = linearity_witness(f, split, "second", cfg, d)
        if witness is not None:
            raise CurryOfNonlinear(witness)
    if f.flavor is Flavor.EXACT:
        head = [PolyNF.var(v) for v in range(1, n + 1)]
        bases = [head + [PolyNF.const(int(t == i)) for t in range(k)] for i in range(k)]
        return Morph.from_polys(n, [p.substitute(b) for p in f.polys for b in bases])
    head = [Var(v) for v in range(1, n + 1)]
    bases = [head + [Const(int(t == i)) for t in range(k)] for i in range(k)]
    memos = [{} for _ in bases]
    exprs = tuple(substitute(e, b, memo) for e in f.exprs for b, memo in zip(bases, memos))
    return Morph(n, k * f.cod, exprs, f.flavor)


def jacobian(f: Morph, d: Differential = differentiate) -> Morph:
    """``J(f) = curry(D[f]) : A -> L(A, B)``."""
    # D[f] is linear in its direction by construction, no check needed
    return linear_curry(d(f), (f.dom, f.dom), check=False)


def point_of_linear(f: LinMorph | Morph, flavor: Flavor | None = None) -> Morph:
    """``p_f : T -> L(A, B)``, the curry of ``T x A --pi1--> A --f--> B``."""
    if isinstance(f, LinMorph):
        f = matrix_morph(f, flavor or Flavor.EXACT)
    return linear_curry(compose(f, proj1(0, f.dom, f.flavor)), (0, f.dom))


def matrix_of(f: Morph) -> LinMorph:
    """Matrix of a linear morphism, read off from ``p_f``."""
    return LinMorph.from_vec(f.cod, f.dom, point_of_linear(f)())


def compose_hom(n: int, k: int, m: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``L(B, C) x L(A, B) -> L(A, C)`` for ``A, B, C = R^n, R^k, R^m``.

    Curry of ``eps . (1 x eps)``; on layouts this is matrix multiplication.
    """
    km, nk = k * m, n * k
    inner = product(identity(km, flavor), eval_linear(n, k, flavor))
    return linear_curry(compose(eval_linear(k, m, flavor), inner), (km + nk, n), check=False)


def hom_functor(f: LinMorph, g: LinMorph, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``L(f, g) : L(B, X) -> L(A, Y)`` for ``f : A -> B``, ``g : X -> Y``."""
    a, b, x = f.cols, f.rows, g.cols
    body = compose(
        matrix_morph(g, flavor),
        compose(eval_linear(b, x, flavor), product(identity(b * x, flavor), matrix_morph(f, flavor))),
    )
    return linear_curry(body, (b * x, a), check=False)


def transpose(n: int, m: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    """``tau : L(R^n, R^m) -> L(R^m, R^n)``, a coordinate permutation."""
    exprs = [None] * (n * m)
    for i in range(n):
        for j in range(m):
            exprs[i * m + j] = Var(j * n + i + 1)
    return Morph(n * m, n * m, tuple(exprs), flavor)


IsoKind = Literal["i", "ii", "iii_l", "iii_r", "iv"]


def hom_iso(kind: IsoKind, dims: Sequence[int], flavor: Flavor = Flavor.EXACT) -> tuple[Morph, Morph]:
    """Mutually inverse pair realising one of the hom isomorphisms.

    ``i``     dims ``(n, m1, m2)``: ``L(A, B x C) -> L(A, B) x L(A, C)``
    ``ii``    dims ``(n1, n2, m)``: ``L(A, C) x L(B, C) -> L(A x B, C)``
    ``iii_l`` dims ``(n,)``: ``L(A, T) -> T``
    ``iii_r`` dims ``(n,)``: ``T -> L(T, A)``
    ``iv``    dims ``(n, k, m)``: ``L(A, L(B, C)) -> L(B, L(A, C))``
    """
    dims = tuple(dims)
    if any(d < 0 for d in dims):
        raise ObjectMismatch(f"invalid dimensions {dims}")
    if kind == "i":
        n, m1, m2 = dims
        fwd = pair(
            hom_functor(LinMorph.identity(n), _pi(m1, m2, 0), flavor),
            hom_functor(LinMorph.identity(n), _pi(m1, m2, 1), flavor),
        )
        blocks = [n * m1, n * m2, n]
        body = pair(
            compose(eval_linear(n, m1, flavor),
                    pair(proj_block(blocks, 0, flavor), proj_block(blocks, 2, flavor))),
            compose(eval_linear(n, m2, flavor),
                    pair(proj_block(blocks, 1, flavor), proj_block(blocks, 2, flavor))),
        )
        bwd = linear_curry(body, (n * m1 + n * m2, n), check=False)
        return fwd, bwd
    if kind == "ii":
        n1, n2, m = dims
        blocks = [n1 * m, n2 * m, n1 + n2]
        h1, h2, ab = (proj_block(blocks, t, flavor) for t in range(3))
        body = (compose(eval_linear(n1, m, flavor), pair(h1, compose(proj0(n1, n2, flavor), ab)))
                + compose(eval_linear(n2, m, flavor), pair(h2, compose(proj1(n1, n2, flavor), ab))))
        fwd = linear_curry(body, (n1 * m + n2 * m, n1 + n2), check=False)
        bwd = pair(
            hom_functor(_iota(n1, n2, 0), LinMorph.identity(m), flavor),
            hom_functor(_iota(n1, n2, 1), LinMorph.identity(m), flavor),
        )
        return fwd, bwd
    if kind in ("iii_l", "iii_r"):
        (n,) = dims
        # L(A, T) and L(T, A) both have dimension n * 0
        return Morph(0, 0, (), flavor), Morph(0, 0, (), flavor)
    if kind == "iv":
        n, k, m = dims
        return _swap_args(n, k, m, flavor), _swap_args(k, n, m, flavor)
    raise ValueError(f"unknown isomorphism kind {kind!r}")


def _pi(m1: int, m2: int, j: int) -> LinMorph:
    p = proj0(m1, m2) if j == 0 else proj1(m1, m2)
    return matrix_of(p)


def _iota(n1: int, n2: int, j: int) -> LinMorph:
    return matrix_of(inj0(n1, n2) if j == 0 else inj1(n1, n2))


def _swap_args(n: int, k: int, m: int, flavor: Flavor) -> Morph:
    # (h, b, a) |-> eps(eps(h, a), b), curried over a and then over b
    blocks = [n * k * m, k, n]
    h, b, a = (proj_block(blocks, t, flavor) for t in range(3))
    ha = compose(eval_linear(n, k * m, flavor), pair(h, a))
    body = compose(eval_linear(k, m, flavor), pair(ha, b))
    over_a = linear_curry(body, (n * k * m + k, n), check=False)
    return linear_curry(over_a, (n * k * m, k), check=False)


# reverse structure -----------------------------------------------------------


def reverse_differentiate(f: Morph) -> Morph:
    """``R[f] : A x B -> A``, ``R[f]_i = sum_j (df_j/dx_i)(x) * x_{n+j}``."""
    n, m = f.dom, f.cod
    if f.flavor is Flavor.EXACT:
        polys = [
            sum((f.polys[j].partial(i) * PolyNF.var(n + j + 1) for j in range(m)), PolyNF())
            for i in range(1, n + 1)
        ]
        return Morph.from_polys(n + m, polys)
    exprs = tuple(
        sum_exprs([mul(partial_derivative(f.exprs[j], i, f.flavor), Var(n + j + 1)) for j in range(m)])
        for i in range(1, n + 1)
    )
    return Morph(n + m, n, exprs, f.flavor)


Reverse = Callable[[Morph], Morph]


def diff_from_reverse(f: Morph, r: Reverse = reverse_differentiate) -> Morph:
    """``D[f] = pi1 . R[R[f]] . (<1, 0> x 1)``, using only the reverse combinator."""
    n, m = f.dom, f.cod
    fl = f.flavor
    rr = r(r(f))
    return compose(proj1(n, m, fl), compose(rr, product(inj0(n, m, fl), identity(n, fl))))


def dagger_in_context(f: Morph, split: Split, *, tau: Transpose = transpose,
                      check: bool = True, cfg: EqConfig = DEFAULT_EQ) -> Morph:
    """``f^dagger[A] = eps . (tau x 1) . (curry(f) x 1) : A x C -> B``."""
    n, k = split
    c = f.cod
    fl = f.flavor
    lam = linear_curry(f, split, check=check, cfg=cfg)
    return compose(eval_linear(c, k, fl), product(compose(tau(k, c, fl), lam), identity(c, fl)))


def gradient(f: Morph, r: Reverse = reverse_differentiate) -> Morph:
    """``grad(f) = curry(R[f]) : A -> L(B, A)``."""
    return linear_curry(r(f), (f.dom, f.cod), check=False)


def hessian(f: Morph, d: Differential = differentiate, r: Reverse = reverse_differentiate) -> Morph:
    """``H(f) = J(grad(f)) : A -> L(A, L(B, A))``."""
    return jacobian(gradient(f, r), d)


def matrix_at(g: Morph, rows: int, cols: int, point: Sequence) -> LinMorph:
    """Evaluate a map into ``L(R^cols, R^rows)`` and reshape the result."""
    return LinMorph.from_vec(rows, cols, g(*point))
