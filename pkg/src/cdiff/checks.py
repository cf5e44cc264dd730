"""Law-checking harness: random corpora, a finite-difference oracle and suites.

Every suite instantiates the universally quantified maps of a family of
equations with generated morphisms and checks both sides with
:func:`cdiff.cdc.find_mismatch` (normal forms for exact scalars, seeded
sampling for floats).  Points in the axioms are themselves random maps out of
a fresh domain, so each check holds "in context".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from cdiff.cdc import (
    Differential,
    Morph,
    add_morphs,
    bang,
    biproduct_diff,
    compose,
    differentiate,
    find_mismatch,
    identity,
    inj0,
    inj1,
    is_bilinear,
    is_linear,
    is_linear_in,
    linearity_witness,
    linearize_partial,
    matrix_morph,
    pair,
    partial_differentiate,
    product,
    proj0,
    proj1,
    zero_morph,
)
from cdiff.expr import (
    DEFAULT_EQ,
    ONE,
    Const,
    EqConfig,
    Expr,
    Flavor,
    FlavorError,
    Prim,
    Semiring,
    Var,
    eval_expr,
    mul,
    partial_derivative,
    power,
    substitute,
    sum_exprs,
)
from cdiff.karoubi import (
    LsMorph,
    LsObject,
    hom_witness,
    ls_compose,
    ls_differentiate,
    ls_identity,
    ls_make,
    ls_product,
    random_linear_idempotent,
    random_unimodular,
    split_linear_idempotent,
)
from cdiff.linclosed import (
    Reverse,
    Transpose,
    compose_hom,
    dagger_in_context,
    diff_from_reverse,
    eval_linear,
    gradient,
    hessian,
    hom_functor,
    hom_iso,
    jacobian,
    linear_curry,
    matrix_at,
    matrix_of,
    point_of_linear,
    reverse_differentiate,
    transpose,
)
from cdiff.matrix import LinMorph, block_diag

SUITES = (
    "cd1", "cd2", "cd3", "cd4", "cd5", "cd6", "cd7",
    "linearity-closure", "factorization", "monicity", "curry-laws",
    "jacobian-laws", "transpose-laws", "gradient-laws", "reverse-roundtrip",
    "isos", "karoubi", "biproduct",
)

FD_STEP = 1e-5
FD_REL_TOL = 1e-5


@dataclass(frozen=True)
class CorpusConfig:
    count: int = 100
    dmax: int = 4
    deg_max: int = 3
    seed: int = 0
    flavor: Flavor = Flavor.EXACT
    semiring: Semiring = Semiring.RAT
    ctx_dmax: int = 2
    ctx_deg: int = 2

    def __post_init__(self):
        object.__setattr__(self, "flavor", Flavor(self.flavor))
        object.__setattr__(self, "semiring", Semiring(self.semiring))
        if self.dmax < 1 or self.count < 0 or self.deg_max < 0:
            raise ValueError("need dmax >= 1, count >= 0 and deg_max >= 0")


@dataclass(frozen=True)
class LawSuite:
    id: str
    corpus: CorpusConfig = CorpusConfig()

    def __post_init__(self):
        if self.id not in SUITES:
            raise ValueError(f"unknown suite {self.id!r}")


# generation -----------------------------------------------------------------


class MorphGen:
    """Seeded source of random morphisms; ``stream`` separates independent uses."""

    def __init__(self, cfg: CorpusConfig, stream: int = 0):
        self.cfg = cfg
        self.rng = np.random.default_rng([cfg.seed, stream])
        self.flavor = cfg.flavor
        self.nat = cfg.semiring is Semiring.NAT

    def dim(self, lo: int = 1, hi: int | None = None) -> int:
        return int(self.rng.integers(lo, (hi or self.cfg.dmax) + 1))

    def coeff(self) -> int:
        if self.nat:
            return int(self.rng.integers(1, 4))
        return int(self.rng.choice([-3, -2, -1, 1, 2, 3]))

    def _const(self, c: int) -> Const:
        return Const(float(c) if self.flavor is Flavor.FLOAT else c)

    def monomial(self, dom: int, degree: int) -> Expr:
        if dom == 0 or degree == 0:
            return ONE
        picks = sorted(int(v) for v in self.rng.integers(1, dom + 1, size=degree))
        return mul_all([power(Var(v), picks.count(v)) for v in sorted(set(picks))])

    def poly(self, dom: int, degree: int | None = None, homogeneous: int | None = None,
             max_terms: int = 4) -> Expr:
        degree = self.cfg.deg_max if degree is None else degree
        if homogeneous is not None and dom == 0 and homogeneous > 0:
            return Const(0)
        terms = []
        for _ in range(int(self.rng.integers(1, max_terms + 1))):
            deg = homogeneous if homogeneous is not None else int(self.rng.integers(0, degree + 1))
            terms.append(mul(self._const(self.coeff()), self.monomial(dom, deg)))
        return sum_exprs(terms)

    def wrapped(self, dom: int) -> Expr:
        """``c * g_k(...g_1(p)...) * m`` with ``g_1`` in {sin, cos}, depth <= 3."""
        inner = self.poly(dom, degree=2, max_terms=2)
        depth = int(self.rng.integers(1, 4))
        e = Prim(str(self.rng.choice(["sin", "cos"])), inner)
        for _ in range(depth - 1):
            e = Prim(str(self.rng.choice(["sin", "cos", "exp"])), e)
        return mul(mul(self._const(self.coeff()), e), self.monomial(dom, int(self.rng.integers(0, 2))))

    def scalar(self, dom: int, degree: int | None = None) -> Expr:
        e = self.poly(dom, degree)
        if self.flavor is Flavor.FLOAT and dom > 0 and self.rng.random() < 0.7:
            e = sum_exprs([e, self.wrapped(dom)])
        return e

    def morph(self, dom: int, cod: int, degree: int | None = None) -> Morph:
        return Morph(dom, cod, tuple(self.scalar(dom, degree) for _ in range(cod)), self.flavor)

    def polynomial_morph(self, dom: int, cod: int, degree: int | None = None) -> Morph:
        return Morph(dom, cod, tuple(self.poly(dom, degree) for _ in range(cod)), self.flavor)

    def linear(self, dom: int, cod: int) -> Morph:
        return Morph(dom, cod, tuple(self.poly(dom, homogeneous=1) for _ in range(cod)), self.flavor)

    def matrix(self, rows: int, cols: int) -> LinMorph:
        vals = self.rng.integers(0 if self.nat else -3, 4, size=(rows, cols))
        return LinMorph.from_rows([[int(v) for v in r] for r in vals], cols)

    def linear_in_second(self, n: int, k: int, cod: int, degree: int | None = None) -> Morph:
        """Components ``sum_i p_i(x) * y_i`` with ``x`` in ``R^n``, ``y`` in ``R^k``."""
        degree = self.cfg.deg_max if degree is None else degree
        comps = []
        for _ in range(cod):
            terms = []
            for i in range(1, k + 1):
                if self.rng.random() < 0.75:
                    coef = self.poly(n, max(degree - 1, 0), max_terms=2)
                    terms.append(mul(coef, Var(n + i)))
            comps.append(sum_exprs(terms))
        return Morph(n + k, cod, tuple(comps), self.flavor)

    def context(self, *dims: int) -> tuple[int, list[Morph]]:
        """A fresh domain ``X`` and one random map ``X -> A`` per requested ``A``."""
        x = self.dim(1, self.cfg.ctx_dmax)
        return x, [self.polynomial_morph(x, a, self.cfg.ctx_deg) for a in dims]

    def idempotent(self, n: int) -> LinMorph:
        return random_linear_idempotent(n, self.rng, self.cfg.semiring)


def mul_all(items: list[Expr]) -> Expr:
    out = ONE
    for e in items:
        out = mul(out, e)
    return out


def gen_corpus(cfg: CorpusConfig) -> list[Morph]:
    """``cfg.count`` random morphisms with dimensions in ``1..dmax``."""
    gen = MorphGen(cfg, stream=0)
    out = []
    for _ in range(cfg.count):
        n, m = gen.dim(), gen.dim()
        out.append(gen.morph(n, m))
    return out


# finite differences -------------------------------------------------------------


def finite_difference(f: Morph, a, b, h: float = FD_STEP) -> np.ndarray:
    """Central difference ``(f(a + h b) - f(a - h b)) / 2h``."""
    if f.flavor is not Flavor.FLOAT:
        raise FlavorError("finite differences need float scalars")
    if not h > 0:
        raise ValueError("step must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    plus = np.array(f(*(a + h * b)), dtype=float)
    minus = np.array(f(*(a - h * b)), dtype=float)
    return (plus - minus) / (2 * h)


def fd_relative_error(sym, fd) -> float:
    """``|sym - fd|_inf / |sym|_inf``, falling back to the absolute error when ``sym = 0``."""
    sym = np.asarray(sym, dtype=float)
    fd = np.asarray(fd, dtype=float)
    if sym.size == 0:
        return 0.0
    scale = float(np.max(np.abs(sym)))
    return float(np.max(np.abs(sym - fd)) / (scale if scale > 0 else 1.0))


def fd_crosscheck(f: Morph, a, b, h: float = FD_STEP, d: Differential = differentiate) -> float:
    """Relative error between ``D[f](a, b)`` and the central difference."""
    sym = d(f)(*(tuple(float(v) for v in a) + tuple(float(v) for v in b)))
    return fd_relative_error(sym, finite_difference(f, a, b, h))


# combinators and mutations ---------------------------------------------------------


@dataclass(frozen=True)
class Combinators:
    """The primitives a suite is allowed to use; swapped out by mutations."""

    D: Differential = differentiate
    R: Reverse = reverse_differentiate
    tau: Transpose = transpose


def _poly_or_expr_partial(f: Morph, j: int, i: int) -> Expr:
    return partial_derivative(f.exprs[j], i, f.flavor)


def _d_origin_partials(f: Morph) -> Morph:
    # partials evaluated at 0 instead of at the point: drops the chain-rule substitution
    n = f.dom
    zeros = [Const(0)] * n
    exprs = tuple(
        sum_exprs([mul(substitute(_poly_or_expr_partial(f, j, i), zeros), Var(n + i)) for i in range(1, n + 1)])
        for j in range(f.cod)
    )
    return Morph(2 * n, f.cod, exprs, f.flavor)


def _d_doubled(f: Morph) -> Morph:
    d = differentiate(f)
    return add_morphs(d, d)


def _d_drop_last_direction(f: Morph) -> Morph:
    n = f.dom
    if n == 0:
        return differentiate(f)
    kill = pair(identity(2 * n - 1, f.flavor), zero_morph(2 * n - 1, 1, f.flavor))
    return compose(differentiate(f), compose(kill, proj0(2 * n - 1, 1, f.flavor)))


def _r_reversed_cotangent(f: Morph) -> Morph:
    n, m = f.dom, f.cod
    flip = pair(proj0(n, m, f.flavor),
                Morph(n + m, m, tuple(Var(n + m - j) for j in range(m)), f.flavor))
    return compose(reverse_differentiate(f), flip)


def _tau_identity(n: int, m: int, flavor: Flavor = Flavor.EXACT) -> Morph:
    return identity(n * m, flavor)


MUTATIONS: dict[str, tuple[str, Combinators]] = {
    "d-origin-partials": ("D evaluates partial derivatives at 0 rather than at the point",
                          Combinators(D=_d_origin_partials)),
    "d-doubled": ("D returns twice the directional derivative", Combinators(D=_d_doubled)),
    "d-drop-last-direction": ("D ignores the last direction coordinate",
                              Combinators(D=_d_drop_last_direction)),
    "r-reversed-cotangent": ("R reads the cotangent block in reverse order",
                             Combinators(R=_r_reversed_cotangent)),
    "tau-identity": ("the transpose is the identity on layouts", Combinators(tau=_tau_identity)),
}


# reports ---------------------------------------------------------------------------


def serialize(v):
    if isinstance(v, Morph):
        return {"dom": v.dom, "cod": v.cod, "scalar": v.flavor.value, "exprs": v.texts()}
    if isinstance(v, LinMorph):
        return v.to_json()
    if isinstance(v, LsObject):
        return {"dim": v.dim, "idem": v.idem.to_json()}
    if isinstance(v, LsMorph):
        return {"src": serialize(v.src), "dst": serialize(v.dst), "map": serialize(v.map)}
    if isinstance(v, (list, tuple)):
        return [serialize(x) for x in v]
    if isinstance(v, dict):
        return {k: serialize(x) for k, x in v.items()}
    return v


@dataclass
class CheckReport:
    suite: str
    seed: int
    flavor: Flavor
    laws: dict[str, dict[str, int]] = field(default_factory=dict)
    failures: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    mutation: str | None = None

    @property
    def passed(self) -> bool:
        return all(t["failed"] == 0 for t in self.laws.values())

    def failed_laws(self) -> list[str]:
        return [k for k, t in self.laws.items() if t["failed"]]

    def to_json(self) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "scalar": self.flavor.value,
            "passed": self.passed,
            "failures": self.failures,
            "laws": self.laws,
        }
        if self.warnings:
            out["warnings"] = self.warnings
        if self.mutation:
            out["mutation"] = self.mutation
        return out


class _Recorder:
    def __init__(self, report: CheckReport, eq: EqConfig, keep: int = 3):
        self.report = report
        self.eq_cfg = eq
        self.keep = keep

    def record(self, law: str, witness: dict | None, inputs: dict | None = None) -> bool:
        tally = self.report.laws.setdefault(law, {"checked": 0, "failed": 0})
        tally["checked"] += 1
        if witness is None:
            return True
        tally["failed"] += 1
        if tally["failed"] <= self.keep:
            w = dict(witness)
            if inputs:
                w["inputs"] = serialize(inputs)
            self.report.failures.append({"law": law, "witness": w})
        return False

    def eq(self, law: str, lhs: Callable[[], Morph] | Morph, rhs: Callable[[], Morph] | Morph,
           inputs: dict | None = None, mismatch=None) -> bool:
        """Compare two maps; thunks let construction errors count as failures."""
        try:
            a = lhs() if callable(lhs) and not isinstance(lhs, Morph) else lhs
            b = rhs() if callable(rhs) and not isinstance(rhs, Morph) else rhs
            w = find_mismatch(a, b, self.eq_cfg) if mismatch is None else mismatch(a, b)
        except (ArithmeticError, ValueError) as exc:
            w = {"error": f"{type(exc).__name__}: {exc}"}
        return self.record(law, w, inputs)

    def holds(self, law: str, check: Callable[[], dict | None | bool], inputs: dict | None = None) -> bool:
        try:
            r = check()
            w = ({"reason": "property does not hold"} if r is False else None) if isinstance(r, bool) else r
        except (ArithmeticError, ValueError) as exc:
            w = {"error": f"{type(exc).__name__}: {exc}"}
        return self.record(law, w, inputs)


# categories for the axiom laws ----------------------------------------------------


class _BaseCat:
    """Polynomial (or smooth, for float scalars) maps between R^n."""

    def __init__(self, gen: MorphGen, comb: Combinators, eq: EqConfig):
        self.gen = gen
        self.fl = gen.flavor
        self.comb = comb
        self.eq_cfg = eq

    def obj(self):
        return self.gen.dim()

    def dim(self, a) -> int:
        return a

    def prod(self, a, b):
        return a + b

    def random_map(self, a, b) -> Morph:
        return self.gen.morph(a, b)

    def context(self, *objs):
        x, maps = self.gen.context(*objs)
        return x, maps

    def identity(self, a) -> Morph:
        return identity(a, self.fl)

    def proj(self, a, b, j: int) -> Morph:
        return (proj0 if j == 0 else proj1)(self.dim(a), self.dim(b), self.fl)

    def zero(self, a, b) -> Morph:
        return zero_morph(self.dim(a), self.dim(b), self.fl)

    def D(self, f: Morph) -> Morph:
        return self.comb.D(f)

    def mismatch(self, src, dst):
        return lambda f, g: find_mismatch(f, g, self.eq_cfg)


class _BiproductCat(_BaseCat):
    """Matrices with ``D[f] = f . pi1``."""

    def random_map(self, a, b) -> Morph:
        return matrix_morph(self.gen.matrix(b, a), self.fl)

    def context(self, *objs):
        x = self.gen.dim(1, self.gen.cfg.ctx_dmax)
        return x, [self.random_map(x, a) for a in objs]

    def D(self, f: Morph) -> Morph:
        return biproduct_diff(f)


class _KaroubiCat(_BaseCat):
    """Objects ``(A, e)``; maps are sandwiched ``e' . g . e`` and compared modulo idempotents."""

    def obj(self):
        n = self.gen.dim()
        return LsObject(n, self.gen.idempotent(n))

    def dim(self, a) -> int:
        return a.dim

    def prod(self, a, b):
        return ls_product(a, b)

    def random_map(self, a, b) -> Morph:
        g = self.gen.morph(a.dim, b.dim)
        return compose(b.e(self.fl), compose(g, a.e(self.fl)))

    def context(self, *objs):
        x_dim = self.gen.dim(1, self.gen.cfg.ctx_dmax)
        x = LsObject(x_dim, self.gen.idempotent(x_dim))
        maps = []
        for a in objs:
            g = self.gen.polynomial_morph(x_dim, a.dim, self.gen.cfg.ctx_deg)
            maps.append(compose(a.e(self.fl), compose(g, x.e(self.fl))))
        return x, maps

    def identity(self, a) -> Morph:
        return a.e(self.fl)

    def mismatch(self, src, dst):
        e_src, e_dst = src.e(self.fl), dst.e(self.fl)

        def cmp(f, g):
            return find_mismatch(compose(e_dst, compose(f, e_src)), compose(e_dst, compose(g, e_src)), self.eq_cfg)

        return cmp


def _axiom_laws(which: int, run: _Recorder, cat: _BaseCat, a, b, f: Morph) -> None:
    """One instance of CD.<which> for ``f : a -> b``."""
    D = cat.D
    aa = cat.prod(a, a)
    eq = lambda law, lhs, rhs, src, dst, **inputs: run.eq(  # noqa: E731
        law, lhs, rhs, dict(f=f, **inputs), mismatch=cat.mismatch(src, dst))
    if which == 1:
        g = cat.random_map(a, b)
        eq("cd1-additive", lambda: D(f + g), lambda: D(f) + D(g), aa, b, g=g)
        eq("cd1-zero", lambda: D(cat.zero(a, b)), lambda: cat.zero(aa, b), aa, b)
    elif which == 2:
        x, (p, u, v) = cat.context(a, a, a)
        eq("cd2-additive", lambda: compose(D(f), pair(p, u + v)),
           lambda: compose(D(f), pair(p, u)) + compose(D(f), pair(p, v)), x, b, a=p, b=u, c=v)
        eq("cd2-zero", lambda: compose(D(f), pair(p, cat.zero(x, a))), lambda: cat.zero(x, b), x, b, a=p)
    elif which == 3:
        eq("cd3-identity", lambda: D(cat.identity(a)), lambda: cat.proj(a, a, 1), aa, a)
        a1, a2 = cat.obj(), cat.obj()
        a12 = cat.prod(a1, a2)
        sq = cat.prod(a12, a12)
        for j, aj in ((0, a1), (1, a2)):
            eq(f"cd3-proj{j}", lambda: D(cat.proj(a1, a2, j)),
               lambda: compose(cat.proj(a1, a2, j), cat.proj(a12, a12, 1)), sq, aj)
    elif which == 4:
        c = cat.obj()
        g = cat.random_map(a, c)
        eq("cd4-pairing", lambda: D(pair(f, g)), lambda: pair(D(f), D(g)), aa, cat.prod(b, c), g=g)
    elif which == 5:
        c = cat.obj()
        g = cat.random_map(b, c)
        eq("cd5-chain", lambda: D(compose(g, f)),
           lambda: compose(D(g), pair(compose(f, cat.proj(a, a, 0)), D(f))), aa, c, g=g)
    elif which in (6, 7):
        x, (p, u, v) = cat.context(a, a, a)
        zero = cat.zero(x, a)
        ddf = lambda: D(D(f))  # noqa: E731
        if which == 6:
            eq("cd6-linear-direction", lambda: compose(ddf(), pair(pair(p, u), pair(zero, v))),
               lambda: compose(D(f), pair(p, v)), x, b, a=p, b=u, c=v)
        else:
            eq("cd7-symmetry", lambda: compose(ddf(), pair(pair(p, u), pair(v, zero))),
               lambda: compose(ddf(), pair(pair(p, v), pair(u, zero))), x, b, a=p, b=u, c=v)


def _fd_laws(run: _Recorder, ctx: _Ctx, f: Morph) -> None:
    rng = ctx.aux.rng
    lo, hi = ctx.eq.box
    a = rng.uniform(lo, hi, size=f.dom)
    b = rng.uniform(lo, hi, size=f.dom)

    def check():
        err = fd_crosscheck(f, a, b, FD_STEP, ctx.comb.D)
        if err <= FD_REL_TOL:
            return None
        return {"point": [float(v) for v in a], "direction": [float(v) for v in b], "relative_error": err}

    run.holds("d-vs-finite-difference", check, {"f": f})


# suites -----------------------------------------------------------------------------------


@dataclass
class _Ctx:
    cfg: CorpusConfig
    comb: Combinators
    eq: EqConfig
    aux: MorphGen

    @property
    def fl(self) -> Flavor:
        return self.cfg.flavor

    @property
    def exact(self) -> bool:
        return self.cfg.flavor is Flavor.EXACT

    def corpus(self) -> list[Morph]:
        return gen_corpus(self.cfg)


def _suite_cd(which: int):
    def run_cd(run: _Recorder, ctx: _Ctx) -> None:
        cat = _BaseCat(ctx.aux, ctx.comb, ctx.eq)
        for f in ctx.corpus():
            _axiom_laws(which, run, cat, f.dom, f.cod, f)
            if not ctx.exact:
                _fd_laws(run, ctx, f)
    return run_cd


def _linear_monomials_only(f: Morph) -> bool:
    return all(len(m) == 1 and m[0][1] == 1 for p in f.polys for m in p.terms)


def _suite_linearity_closure(run: _Recorder, ctx: _Ctx) -> None:
    gen, D, fl = ctx.aux, ctx.comb.D, ctx.fl
    eq_cfg = ctx.eq
    for f in ctx.corpus():
        n = f.dom
        run.holds("d-linear-in-second", lambda: linearity_witness(D(f), (n, n), "second", eq_cfg, D), {"f": f})
        if ctx.exact:
            expected = _linear_monomials_only(f)
            run.holds("linear-iff-degree-one", lambda: is_linear(f, eq_cfg, D) == expected, {"f": f})
        if n >= 2:
            n1 = gen.dim(1, n - 1)
            split = (n1, n - n1)
            lf = linearize_partial(f, split, D)
            run.eq("linearize-idempotent", lambda: linearize_partial(lf, split, D), lf, {"f": f})
            run.holds("linearize-linear-in-second",
                      lambda: linearity_witness(lf, split, "second", eq_cfg, D), {"f": f})
            k1, k2 = split
            x, (p, q, u, v) = gen.context(k1, k2, k1, k2)
            run.eq("partials-sum",
                   lambda: compose(D(f), pair(pair(p, q), pair(u, v))),
                   lambda: compose(partial_differentiate(f, split, "first", D), pair(pair(p, q), u))
                   + compose(partial_differentiate(f, split, "second", D), pair(pair(p, q), v)),
                   {"f": f})
    for _ in range(ctx.cfg.count):
        a, b, c = gen.dim(), gen.dim(), gen.dim()
        l1, l3 = gen.linear(a, b), gen.linear(a, b)
        l2 = gen.linear(b, c)
        run.holds("degree-one-linear", lambda: is_linear(l1, eq_cfg, D), {"f": l1})
        run.holds("linear-compose", lambda: is_linear(compose(l2, l1), eq_cfg, D), {"f": l1, "g": l2})
        run.holds("linear-add", lambda: is_linear(l1 + l3, eq_cfg, D), {"f": l1, "g": l3})
        run.holds("linear-pair", lambda: is_linear(pair(l1, l3), eq_cfg, D), {"f": l1, "g": l3})
        x, (p, q) = gen.context(a, a)
        run.eq("linear-additive", lambda: compose(l1, p + q), lambda: compose(l1, p) + compose(l1, q),
               {"f": l1, "a": p, "b": q})
        lis = gen.linear_in_second(a, b, c)
        run.eq("linearize-fixes-linear-in-second", lambda: linearize_partial(lis, (a, b), D), lis, {"f": lis})
    for n in range(1, ctx.cfg.dmax + 1):
        for m in range(1, ctx.cfg.dmax + 1):
            run.holds("eval-bilinear", lambda: is_bilinear(eval_linear(n, m, fl), (n * m, n), eq_cfg, D))


def _lis_samples(ctx: _Ctx):
    gen = ctx.aux
    for _ in range(ctx.cfg.count):
        n, k, m = gen.dim(), gen.dim(), gen.dim()
        yield n, k, m, gen.linear_in_second(n, k, m)


def _curry(ctx: _Ctx, f: Morph, split) -> Morph:
    return linear_curry(f, split, cfg=ctx.eq, d=ctx.comb.D)


def _suite_factorization(run: _Recorder, ctx: _Ctx) -> None:
    fl = ctx.fl
    for n, k, m, f in _lis_samples(ctx):
        run.eq("factorization",
               lambda: compose(eval_linear(k, m, fl), product(_curry(ctx, f, (n, k)), identity(k, fl))), f,
               {"f": f})


def _suite_monicity(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl = ctx.aux, ctx.fl
    for _ in range(ctx.cfg.count):
        n, k, m = gen.dim(), gen.dim(), gen.dim()
        g = gen.morph(n, k * m)
        h = g if gen.rng.random() < 0.5 else gen.morph(n, k * m)
        uncurry = lambda t: compose(eval_linear(k, m, fl), product(t, identity(k, fl)))  # noqa: E731
        run.eq("curry-of-uncurry", lambda: _curry(ctx, uncurry(g), (n, k)), g, {"g": g})

        def implication():
            same_uncurried = find_mismatch(uncurry(g), uncurry(h), ctx.eq) is None
            w = find_mismatch(g, h, ctx.eq)
            return w if same_uncurried else None

        run.holds("uncurry-injective", implication, {"g": g, "h": h})


def _suite_curry_laws(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, D = ctx.aux, ctx.fl, ctx.comb.D
    for n, k, m, f in _lis_samples(ctx):
        g = gen.linear_in_second(n, k, m)
        run.eq("curry-additive", lambda: _curry(ctx, f + g, (n, k)),
               lambda: _curry(ctx, f, (n, k)) + _curry(ctx, g, (n, k)), {"f": f, "g": g})
        run.eq("curry-zero", lambda: _curry(ctx, zero_morph(n + k, m, fl), (n, k)), zero_morph(n, k * m, fl))

        # D[curry f] = curry(D[f] . <<a, b>, <a', 0>>) on (A x A) x B
        def exchange_rhs():
            p00 = compose(proj0(n, n, fl), proj0(2 * n, k, fl))
            p10 = compose(proj1(n, n, fl), proj0(2 * n, k, fl))
            p1 = proj1(2 * n, k, fl)
            body = compose(D(f), pair(pair(p00, p1), pair(p10, zero_morph(2 * n + k, k, fl))))
            return _curry(ctx, body, (2 * n, k))

        run.eq("curry-derivative-exchange", lambda: D(_curry(ctx, f, (n, k))), exchange_rhs, {"f": f})
    for _ in range(max(ctx.cfg.count // 4, 1)):
        a, b, x, y = gen.dim(1, 3), gen.dim(1, 3), gen.dim(1, 3), gen.dim(1, 3)
        mf, mg = gen.matrix(b, a), gen.matrix(y, x)
        lf = hom_functor(mf, mg, fl)
        run.holds("hom-functor-linear", lambda: is_linear(lf, ctx.eq, D), {"f": mf, "g": mg})
        # defining equation: eps . (L(f, g) x 1) = g . eps . (1 x f)
        run.eq("hom-functor-defining",
               lambda: compose(eval_linear(a, y, fl), product(lf, identity(a, fl))),
               lambda: chain3(matrix_morph(mg, fl), eval_linear(b, x, fl),
                              product(identity(b * x, fl), matrix_morph(mf, fl))),
               {"f": mf, "g": mg})
        run.eq("hom-functor-matrix", lf, lambda: matrix_morph(_hom_functor_matrix(mf, mg), fl),
               {"f": mf, "g": mg})
        run.eq("hom-functor-identity", lambda: hom_functor(LinMorph.identity(a), LinMorph.identity(b), fl),
               identity(a * b, fl))
        mh = gen.matrix(a, gen.dim(1, 3))
        mk = gen.matrix(gen.dim(1, 3), y)
        run.eq("hom-functor-functorial",
               lambda: hom_functor(mf @ mh, mk @ mg, fl),
               lambda: compose(hom_functor(mh, mk, fl), lf), {"f": mf, "g": mg, "h": mh, "k": mk})
        run.eq("point-defining",
               lambda: compose(eval_linear(a, b, fl),
                               pair(compose(point_of_linear(mf, fl), bang(a, fl)), identity(a, fl))),
               matrix_morph(mf, fl), {"f": mf})
        c = gen.dim(1, 3)
        comp = compose_hom(a, b, c, fl)
        run.holds("composition-bilinear", lambda: is_bilinear(comp, (b * c, a * b), ctx.eq, D))
        mg2 = gen.matrix(c, b)
        run.eq("composition-is-matmul",
               lambda: compose(comp, constant_vec(mg2.vec() + mf.vec(), fl)),
               lambda: constant_vec((mg2 @ mf).vec(), fl), {"f": mf, "g": mg2})


def chain3(h: Morph, g: Morph, f: Morph) -> Morph:
    return compose(h, compose(g, f))


def _hom_functor_matrix(mf: LinMorph, mg: LinMorph) -> LinMorph:
    """Matrix of ``h |-> g h f`` on row-major layouts (Kronecker product ``g (x) f^T``)."""
    b, a = mf.rows, mf.cols
    y, x = mg.rows, mg.cols
    rows = []
    for j in range(y):
        for i in range(a):
            # output entry (j, i) = sum_{s,t} g[j][s] h[s][t] f[t][i]
            rows.append([mg.entries[j][s] * mf.entries[t][i] for s in range(x) for t in range(b)])
    return LinMorph.from_rows(rows, x * b)


def constant_vec(values, fl: Flavor) -> Morph:
    return Morph(0, len(values), tuple(Const(v) for v in values), fl)


def _suite_jacobian(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, D = ctx.aux, ctx.fl, ctx.comb.D
    for f in ctx.corpus():
        a, b = f.dom, f.cod
        c = gen.dim()
        g = gen.morph(b, c)
        f2 = gen.morph(a, b)
        run.eq("jacobian-additive", lambda: jacobian(f + f2, D), lambda: jacobian(f, D) + jacobian(f2, D),
               {"f": f, "g": f2})
        run.eq("jacobian-zero", lambda: jacobian(zero_morph(a, b, fl), D), zero_morph(a, a * b, fl))
        run.eq("jacobian-chain", lambda: jacobian(compose(g, f), D),
               lambda: compose(compose_hom(a, b, c, fl), pair(compose(jacobian(g, D), f), jacobian(f, D))),
               {"f": f, "g": g})
        lin = gen.linear(a, b)
        run.eq("jacobian-linear", lambda: jacobian(lin, D),
               lambda: compose(point_of_linear(lin), bang(a, fl)), {"f": lin})
        if ctx.exact:
            pt = [int(v) for v in gen.rng.integers(-3, 4, size=a)]
            run.holds("jacobian-classical", lambda: _classical_jacobian_witness(f, pt, D), {"f": f})


def _classical_jacobian_witness(f: Morph, pt: list, D: Differential) -> dict | None:
    got = matrix_at(jacobian(f, D), f.cod, f.dom, pt)
    want = LinMorph.from_rows(
        [[eval_expr(partial_derivative(f.exprs[j], i + 1, f.flavor), pt) for i in range(f.dom)]
         for j in range(f.cod)], f.dom)
    if got == want:
        return None
    return {"point": [str(v) for v in pt], "lhs": got.to_json(), "rhs": want.to_json()}


def _suite_transpose(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, tau, D = ctx.aux, ctx.fl, ctx.comb.tau, ctx.comb.D
    d = ctx.cfg.dmax
    for n in range(1, d + 1):
        for m in range(1, d + 1):
            run.eq("transpose-involution", lambda: compose(tau(m, n, fl), tau(n, m, fl)), identity(n * m, fl))
            run.holds("transpose-linear", lambda: is_linear(tau(n, m, fl), ctx.eq, D))
            # tau . p_{pi_j} = p_{iota_j} for A = R^n, B = R^m
            run.eq("transpose-proj0", lambda: compose(tau(n + m, n, fl), point_of_linear(proj0(n, m, fl))),
                   lambda: point_of_linear(inj0(n, m, fl)))
            run.eq("transpose-proj1", lambda: compose(tau(n + m, m, fl), point_of_linear(proj1(n, m, fl))),
                   lambda: point_of_linear(inj1(n, m, fl)))
        run.eq("transpose-identity-point", lambda: compose(tau(n, n, fl), point_of_linear(identity(n, fl))),
               lambda: point_of_linear(identity(n, fl)))
    for _ in range(max(ctx.cfg.count // 4, 1)):
        n, k, m = gen.dim(1, 3), gen.dim(1, 3), gen.dim(1, 3)
        km, nk = k * m, n * k
        lhs = lambda: compose(tau(n, m, fl), compose_hom(n, k, m, fl))  # noqa: E731
        rhs = lambda: compose(compose_hom(m, k, n, fl),  # noqa: E731
                              pair(compose(tau(n, k, fl), proj1(km, nk, fl)),
                                   compose(tau(k, m, fl), proj0(km, nk, fl))))
        run.eq("transpose-composition", lhs, rhs, {"dims": [n, k, m]})
        mat = gen.matrix(m, n)
        run.eq("transpose-matrix", lambda: compose(tau(n, m, fl), constant_vec(mat.vec(), fl)),
               lambda: constant_vec(mat.T.vec(), fl), {"f": mat})


def _suite_gradient(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, D, R, tau = ctx.aux, ctx.fl, ctx.comb.D, ctx.comb.R, ctx.comb.tau
    for f in ctx.corpus():
        a, b = f.dom, f.cod
        c = gen.dim()
        g = gen.morph(b, c)
        f2 = gen.morph(a, b)
        run.eq("gradient-transposed-jacobian", lambda: gradient(f, R),
               lambda: compose(tau(a, b, fl), jacobian(f, D)), {"f": f})
        run.eq("gradient-additive", lambda: gradient(f + f2, R), lambda: gradient(f, R) + gradient(f2, R),
               {"f": f, "g": f2})
        run.eq("gradient-zero", lambda: gradient(zero_morph(a, b, fl), R), zero_morph(a, a * b, fl))
        run.eq("gradient-chain", lambda: gradient(compose(g, f), R),
               lambda: compose(compose_hom(c, b, a, fl), pair(gradient(f, R), compose(gradient(g, R), f))),
               {"f": f, "g": g})
        lin = gen.linear(a, b)
        run.eq("gradient-linear", lambda: gradient(lin, R),
               lambda: compose(point_of_linear(matrix_of(lin).T, fl), bang(a, fl)), {"f": lin})
    for n, k, m, f in _lis_samples(ctx):
        dag = lambda: dagger_in_context(f, (n, k), tau=tau, cfg=ctx.eq)  # noqa: E731
        run.eq("dagger-curry", lambda: _curry(ctx, dag(), (n, m)),
               lambda: compose(tau(k, m, fl), _curry(ctx, f, (n, k))), {"f": f})
        run.eq("dagger-via-eval", dag,
               lambda: compose(dagger_in_context(eval_linear(k, m, fl), (k * m, k), tau=tau, check=False),
                               product(_curry(ctx, f, (n, k)), identity(m, fl))), {"f": f})
        run.eq("dagger-involution", lambda: dagger_in_context(dag(), (n, m), tau=tau, cfg=ctx.eq), f, {"f": f})
        run.holds("dagger-linear-in-second",
                  lambda: linearity_witness(dag(), (n, m), "second", ctx.eq, D), {"f": f})
    for _ in range(max(ctx.cfg.count // 4, 20)):
        n = gen.dim()
        f = gen.morph(n, 1)
        h = hessian(f, D, R)
        run.eq("hessian-symmetric", h, lambda: compose(tau(n, n, fl), h), {"f": f})
        if ctx.exact:
            pt = [int(v) for v in gen.rng.integers(-3, 4, size=n)]

            def pointwise():
                mat = matrix_at(h, n, n, pt)
                return None if mat == mat.T else {"point": pt, "matrix": mat.to_json()}

            run.holds("hessian-symmetric-at-point", pointwise, {"f": f})


def _suite_reverse_roundtrip(run: _Recorder, ctx: _Ctx) -> None:
    D, R, tau = ctx.comb.D, ctx.comb.R, ctx.comb.tau
    for f in ctx.corpus():
        n = f.dom
        run.eq("d-from-reverse", lambda: diff_from_reverse(f, R), lambda: D(f), {"f": f})
        run.eq("reverse-is-dagger-of-d", lambda: R(f),
               lambda: dagger_in_context(D(f), (n, n), tau=tau, check=False), {"f": f})
        run.holds("reverse-linear-in-second", lambda: linearity_witness(R(f), (n, f.cod), "second", ctx.eq, D),
                  {"f": f})


def _suite_isos(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, D = ctx.aux, ctx.fl, ctx.comb.D
    kinds = ("i", "ii", "iii_l", "iii_r", "iv")
    for t in range(max(ctx.cfg.count // 5, len(kinds))):
        kind = kinds[t % len(kinds)]
        dims = (gen.dim(1, 3),) if kind.startswith("iii") else (gen.dim(0, 3), gen.dim(0, 3), gen.dim(0, 3))
        fwd, bwd = hom_iso(kind, dims, fl)
        run.eq(f"iso-{kind}-bwd-fwd", lambda: compose(bwd, fwd), identity(fwd.dom, fl), {"dims": list(dims)})
        run.eq(f"iso-{kind}-fwd-bwd", lambda: compose(fwd, bwd), identity(bwd.dom, fl), {"dims": list(dims)})
        run.holds(f"iso-{kind}-linear", lambda: is_linear(fwd, ctx.eq, D) and is_linear(bwd, ctx.eq, D),
                  {"dims": list(dims)})
    for _ in range(10):
        a2, a, b, b2, c, c2 = (gen.dim(1, 3) for _ in range(6))
        mf, g1, g2 = gen.matrix(a, a2), gen.matrix(b2, b), gen.matrix(c2, c)
        fwd, _ = hom_iso("i", (a, b, c), fl)
        fwd2, _ = hom_iso("i", (a2, b2, c2), fl)
        run.eq("iso-i-natural",
               lambda: compose(fwd2, hom_functor(mf, block_diag([g1, g2]), fl)),
               lambda: compose(product(hom_functor(mf, g1, fl), hom_functor(mf, g2, fl)), fwd),
               {"f": mf, "g1": g1, "g2": g2})


def _suite_karoubi(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, D, eq_cfg = ctx.aux, ctx.fl, ctx.comb.D, ctx.eq
    count = max(ctx.cfg.count, 30)
    # splitting of generated linear idempotents commuting with the object's idempotent
    for _ in range(max(count // 2, 20)):
        n = gen.dim()
        basis = (None if ctx.cfg.semiring is Semiring.NAT else random_unimodular(n, gen.rng))
        if basis is None:
            perm = gen.rng.permutation(n)
            p = LinMorph.from_rows([[int(perm[i] == j) for j in range(n)] for i in range(n)], n)
            basis = (p, p.T)
        de = [int(v) for v in gen.rng.integers(0, 2, size=n)]
        df = [int(v) for v in gen.rng.integers(0, 2, size=n)]
        obj = LsObject(n, random_linear_idempotent(n, gen.rng, basis=basis, diag=de))
        fmat = random_linear_idempotent(n, gen.rng, basis=basis, diag=df)
        inputs = {"object": obj, "f": fmat}
        try:
            f = ls_make(obj, obj, matrix_morph(fmat, fl), eq_cfg)
            target, r, s = split_linear_idempotent(obj, f, eq_cfg)
        except (ValueError, AssertionError) as exc:
            run.record("split", {"error": f"{type(exc).__name__}: {exc}"}, inputs)
            continue
        run.record("split", None)
        sand = lambda src, dst, h: compose(dst.e(fl), compose(h, src.e(fl)))  # noqa: E731
        run.eq("split-s-after-r", lambda: sand(obj, obj, compose(s.map, r.map)), lambda: sand(obj, obj, f.map),
               inputs)
        run.eq("split-r-after-s", lambda: sand(target, target, compose(r.map, s.map)),
               lambda: sand(target, target, target.e(fl)), inputs)
    # hom condition under composition and differentiation
    cat = _KaroubiCat(gen, ctx.comb, eq_cfg)
    for _ in range(20):
        a, b, c = cat.obj(), cat.obj(), cat.obj()
        f = LsMorph(a, b, cat.random_map(a, b))
        g = LsMorph(b, c, cat.random_map(b, c))
        run.holds("hom-compose", lambda: hom_witness(a, c, ls_compose(g, f, eq_cfg).map, eq_cfg),
                  {"f": f, "g": g})
        run.holds("hom-differentiate",
                  lambda: hom_witness(ls_product(a, a), b, D(f.map), eq_cfg), {"f": f})
    for _ in range(10):
        n, m = gen.dim(), gen.dim()
        f = gen.morph(n, m)
        lf = ls_make(LsObject.trivial(n), LsObject.trivial(m), f, eq_cfg)
        run.eq("embedding", lambda: ls_differentiate(lf, eq_cfg, D).map, lambda: D(f), {"f": f})
        run.eq("embedding-identity", lambda: ls_identity(LsObject.trivial(n), fl).map, identity(n, fl))
    for which in range(1, 8):
        for _ in range(count):
            a, b = cat.obj(), cat.obj()
            _axiom_laws(which, run, cat, a, b, cat.random_map(a, b))


def _suite_biproduct(run: _Recorder, ctx: _Ctx) -> None:
    gen, fl, eq_cfg = ctx.aux, ctx.fl, ctx.eq
    cat = _BiproductCat(gen, ctx.comb, eq_cfg)
    count = max(ctx.cfg.count, 30)
    for which in range(1, 8):
        for _ in range(count):
            a, b = cat.obj(), cat.obj()
            _axiom_laws(which, run, cat, a, b, cat.random_map(a, b))
    found = 0
    for _ in range(count):
        n1, n2, m = gen.dim(), gen.dim(), gen.dim()
        mat = gen.matrix(m, n1 + n2)
        if gen.rng.random() < 0.5:
            mat = LinMorph.from_rows([list(r[:n1]) + [0] * n2 for r in mat.entries], n1 + n2)
        f = matrix_morph(mat, fl)
        if is_linear_in(f, (n1, n2), "first", eq_cfg, biproduct_diff):
            found += 1
            run.eq("linear-in-first-ignores-second", f,
                   lambda: compose(f, pair(proj0(n1, n2, fl), zero_morph(n1 + n2, n2, fl))), {"f": mat})
    if not found:
        run.report.warnings.append("no map linear in its first argument was generated")


_SUITE_FUNCS: dict[str, Callable[[_Recorder, _Ctx], None]] = {
    **{f"cd{i}": _suite_cd(i) for i in range(1, 8)},
    "linearity-closure": _suite_linearity_closure,
    "factorization": _suite_factorization,
    "monicity": _suite_monicity,
    "curry-laws": _suite_curry_laws,
    "jacobian-laws": _suite_jacobian,
    "transpose-laws": _suite_transpose,
    "gradient-laws": _suite_gradient,
    "reverse-roundtrip": _suite_reverse_roundtrip,
    "isos": _suite_isos,
    "karoubi": _suite_karoubi,
    "biproduct": _suite_biproduct,
}


def run_suite(suite: LawSuite | str, cfg: CorpusConfig | None = None, *, eq: EqConfig = DEFAULT_EQ,
              mutation: str | None = None) -> CheckReport:
    """Evaluate every law of one suite; failures are report contents, never raised."""
    if isinstance(suite, str):
        suite = LawSuite(suite, cfg or CorpusConfig())
    cfg = suite.corpus
    comb = MUTATIONS[mutation][1] if mutation else Combinators()
    report = CheckReport(suite.id, cfg.seed, cfg.flavor, mutation=mutation)
    if cfg.count == 0:
        report.warnings.append("empty corpus: suite passes vacuously")
        return report
    ctx = _Ctx(cfg, comb, eq, MorphGen(cfg, stream=1 + SUITES.index(suite.id)))
    _SUITE_FUNCS[suite.id](_Recorder(report, eq), ctx)
    return report


def run_all(cfg: CorpusConfig | None = None, *, eq: EqConfig = DEFAULT_EQ,
            mutation: str | None = None, suites: Iterable[str] = SUITES) -> list[CheckReport]:
    return [run_suite(s, cfg, eq=eq, mutation=mutation) for s in suites]
