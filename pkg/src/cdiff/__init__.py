"""Differential combinators, linear curry and law checking for maps between R^n."""

from cdiff.cdc import (
    Morph,
    ObjectMismatch,
    compose,
    differentiate,
    find_mismatch,
    from_texts,
    identity,
    is_bilinear,
    is_linear,
    is_linear_in,
    linearize_partial,
    morph_equal,
    pair,
    partial_differentiate,
    proj0,
    proj1,
    zero_morph,
)
from cdiff.checks import CheckReport, CorpusConfig, LawSuite, finite_difference, gen_corpus, run_suite
from cdiff.expr import EqConfig, Flavor, Semiring, expr_equal, parse_expr
from cdiff.karoubi import LsMorph, LsObject, ls_compose, ls_differentiate, ls_make, split_linear_idempotent
from cdiff.linclosed import (
    CurryOfNonlinear,
    dagger_in_context,
    diff_from_reverse,
    eval_linear,
    gradient,
    hessian,
    hom_iso,
    jacobian,
    linear_curry,
    reverse_differentiate,
    transpose,
)
from cdiff.matrix import LinMorph

__all__ = [
    "CheckReport", "CorpusConfig", "CurryOfNonlinear", "EqConfig", "Flavor", "LawSuite", "LinMorph",
    "LsMorph", "LsObject", "Morph", "ObjectMismatch", "Semiring", "compose", "dagger_in_context",
    "diff_from_reverse", "differentiate", "eval_linear", "expr_equal", "find_mismatch", "finite_difference",
    "from_texts", "gen_corpus", "gradient", "hessian", "hom_iso", "identity", "is_bilinear", "is_linear",
    "is_linear_in", "jacobian", "linear_curry", "linearize_partial", "ls_compose", "ls_differentiate",
    "ls_make", "morph_equal", "pair", "parse_expr", "partial_differentiate", "proj0", "proj1",
    "reverse_differentiate", "run_suite", "split_linear_idempotent", "transpose", "zero_morph",
]
