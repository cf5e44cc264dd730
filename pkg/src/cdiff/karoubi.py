"""Linear idempotent completion: objects carry a linear idempotent.

Maps ``(A, e) -> (B, e')`` are maps ``f`` with ``f . e = e' . f``.  The
identity on ``(A, e)`` is ``e`` itself, and two maps are identified when
``e' . f . e`` agree, so a splitting ``r . s = 1`` can be checked literally.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cdiff.cdc import (
    Differential,
    Morph,
    ObjectMismatch,
    compose,
    differentiate,
    find_mismatch,
    is_linear,
    matrix_morph,
)
from cdiff.expr import DEFAULT_EQ, EqConfig, Flavor, Semiring
from cdiff.linclosed import matrix_of
from cdiff.matrix import LinMorph, block_diag


class HomConditionViolated(ValueError):
    def __init__(self, witness: dict):
        super().__init__(f"f . e != e' . f: {witness}")
        self.witness = witness


class NotIdempotent(ValueError):
    pass


class NotLinear(ValueError):
    pass


@dataclass(frozen=True)
class LsObject:
    dim: int
    idem: LinMorph

    def __post_init__(self):
        if (self.idem.rows, self.idem.cols) != (self.dim, self.dim):
            raise ObjectMismatch(f"idempotent is {self.idem.rows}x{self.idem.cols}, object has dim {self.dim}")
        if self.idem @ self.idem != self.idem:
            raise NotIdempotent(f"e . e != e for {self.idem.entries}")

    @classmethod
    def trivial(cls, n: int) -> LsObject:
        return cls(n, LinMorph.identity(n))

    def e(self, flavor: Flavor = Flavor.EXACT) -> Morph:
        return matrix_morph(self.idem, flavor)


def ls_product(a: LsObject, b: LsObject) -> LsObject:
    return LsObject(a.dim + b.dim, block_diag([a.idem, b.idem]))


@dataclass(frozen=True, eq=False)
class LsMorph:
    src: LsObject
    dst: LsObject
    map: Morph


def hom_witness(src: LsObject, dst: LsObject, f: Morph, cfg: EqConfig = DEFAULT_EQ) -> dict | None:
    return find_mismatch(compose(f, src.e(f.flavor)), compose(dst.e(f.flavor), f), cfg)


def ls_make(src: LsObject, dst: LsObject, f: Morph, cfg: EqConfig = DEFAULT_EQ) -> LsMorph:
    """Wrap ``f`` after checking ``f . e = e' . f``."""
    if (f.dom, f.cod) != (src.dim, dst.dim):
        raise ObjectMismatch(f"map {f.dom}->{f.cod} does not fit {src.dim}->{dst.dim}")
    witness = hom_witness(src, dst, f, cfg)
    if witness is not None:
        raise HomConditionViolated(witness)
    return LsMorph(src, dst, f)


def ls_identity(a: LsObject, flavor: Flavor = Flavor.EXACT) -> LsMorph:
    return LsMorph(a, a, a.e(flavor))


def ls_equal(f: LsMorph, g: LsMorph, cfg: EqConfig = DEFAULT_EQ) -> bool:
    if (f.src, f.dst) != (g.src, g.dst):
        return False
    fl = f.map.flavor
    sandwich = lambda h: compose(f.dst.e(fl), compose(h, f.src.e(fl)))  # noqa: E731
    return find_mismatch(sandwich(f.map), sandwich(g.map), cfg) is None


def ls_compose(g: LsMorph, f: LsMorph, cfg: EqConfig = DEFAULT_EQ) -> LsMorph:
    if f.dst != g.src:
        raise ObjectMismatch("codomain of f is not the domain of g")
    return ls_make(f.src, g.dst, compose(g.map, f.map), cfg)


def ls_differentiate(f: LsMorph, cfg: EqConfig = DEFAULT_EQ,
                     d: Differential = differentiate) -> LsMorph:
    """``D[f] : (A x A, e x e) -> (B, e')``, computed on the underlying map."""
    return ls_make(ls_product(f.src, f.src), f.dst, d(f.map), cfg)


def split_linear_idempotent(obj: LsObject, f: LsMorph, cfg: EqConfig = DEFAULT_EQ
                            ) -> tuple[LsObject, LsMorph, LsMorph]:
    """Split a linear idempotent endomorphism of ``obj``.

    Returns ``((A, e.f), r, s)`` with ``r = s = e.f``; when ``f`` already
    satisfies ``f = e.f.e`` the new idempotent is ``f`` itself.
    """
    if f.src != obj or f.dst != obj:
        raise ObjectMismatch("f must be an endomorphism of obj")
    fm = f.map
    if not is_linear(fm, cfg):
        raise NotLinear(f"map is not linear: {fm}")
    witness = find_mismatch(compose(fm, fm), fm, cfg)
    if witness is not None:
        raise NotIdempotent(f"f . f != f: {witness}")
    hom = hom_witness(obj, obj, fm, cfg)
    if hom is not None:
        raise HomConditionViolated(hom)
    m = matrix_of(compose(obj.e(fm.flavor), fm))
    if fm.flavor is Flavor.FLOAT:
        m = LinMorph.from_rows([[Fraction(v).limit_denominator(10**9) for v in r] for r in m.entries])
    target = LsObject(obj.dim, m)
    r = ls_make(obj, target, matrix_morph(m, fm.flavor), cfg)
    s = ls_make(target, obj, matrix_morph(m, fm.flavor), cfg)
    if not ls_equal(ls_compose(s, r, cfg), f, cfg):
        raise AssertionError("s . r != f")
    if not ls_equal(ls_compose(r, s, cfg), ls_identity(target, fm.flavor), cfg):
        raise AssertionError("r . s != 1")
    return target, r, s


# generation -------------------------------------------------------------------


def random_unimodular(n: int, rng: np.random.Generator, steps: int | None = None
                      ) -> tuple[LinMorph, LinMorph]:
    """An integer matrix of determinant +-1 and its exact inverse."""
    p = [[int(i == j) for j in range(n)] for i in range(n)]
    inv = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(steps if steps is not None else 2 * n):
        if n < 2:
            break
        i, j = rng.choice(n, size=2, replace=False)
        c = int(rng.choice([-1, 1]))
        # P <- P E with E = I + c e_ij (add c * column i to column j)
        for row in p:
            row[j] += c * row[i]
        # P^-1 <- E^-1 P^-1 with E^-1 = I - c e_ij (subtract c * row j from row i)
        inv[i] = [a - c * b for a, b in zip(inv[i], inv[j])]
    return LinMorph.from_rows(p, n), LinMorph.from_rows(inv, n)


def random_linear_idempotent(n: int, rng: np.random.Generator,
                             semiring: Semiring = Semiring.RAT,
                             basis: tuple[LinMorph, LinMorph] | None = None,
                             diag: list[int] | None = None) -> LinMorph:
    """``P diag(0/1) P^-1``, exactly idempotent.

    In the natural-number semiring ``P`` is a permutation so entries stay
    nonnegative.  Passing the same ``basis`` yields commuting idempotents.
    """
    if basis is None:
        if Semiring(semiring) is Semiring.NAT:
            perm = rng.permutation(n)
            p = LinMorph.from_rows([[int(perm[i] == j) for j in range(n)] for i in range(n)], n)
            basis = (p, p.T)
        else:
            basis = random_unimodular(n, rng)
    if diag is None:
        diag = [int(v) for v in rng.integers(0, 2, size=n)]
    p, p_inv = basis
    d = LinMorph.from_rows([[diag[i] if i == j else 0 for j in range(n)] for i in range(n)], n)
    return p @ d @ p_inv
