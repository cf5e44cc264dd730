from __future__ import annotations

import json

import numpy as np
import pytest

from cdiff.cdc import from_texts, is_linear, matrix_morph
from cdiff.checks import (
    MUTATIONS,
    SUITES,
    CorpusConfig,
    LawSuite,
    MorphGen,
    fd_crosscheck,
    fd_relative_error,
    finite_difference,
    gen_corpus,
    run_suite,
)
from cdiff.expr import Flavor, FlavorError, Prim, Semiring, _walk, has_neg
from cdiff.matrix import LinMorph

SMALL = CorpusConfig(count=12)


def test_corpus_is_deterministic():
    a = gen_corpus(CorpusConfig(seed=0, count=30))
    b = gen_corpus(CorpusConfig(seed=0, count=30))
    assert [f.texts() for f in a] == [f.texts() for f in b]
    c = gen_corpus(CorpusConfig(seed=1, count=30))
    assert [f.texts() for f in a] != [f.texts() for f in c]


def test_corpus_respects_bounds():
    for f in gen_corpus(CorpusConfig(count=50, dmax=3, deg_max=2)):
        assert 1 <= f.dom <= 3 and 1 <= f.cod <= 3
        assert all(p.degree() <= 2 for p in f.polys)
        coeffs = [c for p in f.polys for c in p.terms.values()]
        assert all(c.denominator == 1 for c in coeffs)


def test_nat_corpus_has_no_negatives():
    for f in gen_corpus(CorpusConfig(count=30, semiring=Semiring.NAT)):
        assert all(c > 0 for p in f.polys for c in p.terms.values())
        assert not any(has_neg(e) for e in f.exprs)


def test_float_corpus_uses_functions():
    fs = gen_corpus(CorpusConfig(count=30, flavor=Flavor.FLOAT))
    assert all(f.flavor is Flavor.FLOAT for f in fs)
    assert sum(any(isinstance(n, Prim) for e in f.exprs for n in _walk(e)) for f in fs) >= 15


def test_homogeneous_degree_one_maps_are_linear():
    gen = MorphGen(CorpusConfig(seed=2))
    for _ in range(30):
        assert is_linear(gen.linear(gen.dim(), gen.dim()))


def test_empty_corpus_passes_with_warning():
    r = run_suite("cd1", CorpusConfig(count=0))
    assert r.passed and r.warnings and r.to_json()["laws"] == {}


def test_unknown_suite_is_rejected():
    with pytest.raises(ValueError):
        LawSuite("cd8")


def test_finite_difference_examples():
    sq = from_texts(1, ["x1^2"], Flavor.FLOAT)
    assert abs(finite_difference(sq, [1.0], [1.0])[0] - 2.0) <= 1e-9
    lin = from_texts(2, ["3*x1 - x2"], Flavor.FLOAT)
    assert abs(finite_difference(lin, [0.3, -1.1], [0.5, 2.0])[0] - (1.5 - 2.0)) <= 1e-9
    const = from_texts(2, ["4.5"], Flavor.FLOAT)
    assert finite_difference(const, [1.0, 2.0], [3.0, 4.0])[0] == 0.0


def test_finite_difference_preconditions():
    with pytest.raises(FlavorError):
        finite_difference(from_texts(1, ["x1"]), [1], [1])
    with pytest.raises(ValueError):
        finite_difference(from_texts(1, ["x1"], Flavor.FLOAT), [1.0], [1.0], h=0.0)


def test_relative_error_definition():
    assert fd_relative_error([2.0, -4.0], [2.0, -4.00004]) == pytest.approx(1e-5)
    assert fd_relative_error([0.0], [1e-7]) == pytest.approx(1e-7)
    f = from_texts(2, ["sin(x1)*exp(cos(x2))"], Flavor.FLOAT)
    assert fd_crosscheck(f, [0.4, -1.3], [1.0, 0.5]) < 1e-8


@pytest.mark.parametrize("suite", SUITES)
def test_every_suite_passes_on_a_small_exact_corpus(suite):
    r = run_suite(suite, SMALL)
    assert r.passed, r.failures[:1]
    assert r.laws and all(t["checked"] > 0 for t in r.laws.values())


@pytest.mark.parametrize("suite", ["cd2", "cd5", "cd7", "jacobian-laws", "gradient-laws", "reverse-roundtrip"])
def test_float_suites_pass_and_cross_check(suite):
    r = run_suite(suite, CorpusConfig(count=10, flavor=Flavor.FLOAT))
    assert r.passed, r.failures[:1]
    if suite.startswith("cd"):
        assert r.laws["d-vs-finite-difference"]["checked"] == 10


@pytest.mark.parametrize("suite", ["cd1", "cd5", "linearity-closure", "karoubi"])
def test_nat_semiring_suites_pass(suite):
    assert run_suite(suite, CorpusConfig(count=10, semiring=Semiring.NAT)).passed


def test_reports_are_reproducible_and_serializable():
    a = run_suite("cd5", SMALL).to_json()
    b = run_suite("cd5", SMALL).to_json()
    assert a == b
    assert set(a) >= {"suite", "seed", "passed", "failures"}
    json.dumps(a)


@pytest.mark.parametrize("mutation,suite", [
    ("d-origin-partials", "cd5"),
    ("d-doubled", "cd3"),
    ("d-drop-last-direction", "cd3"),
    ("r-reversed-cotangent", "reverse-roundtrip"),
    ("tau-identity", "transpose-laws"),
])
def test_mutations_are_caught(mutation, suite):
    r = run_suite(suite, CorpusConfig(count=30), mutation=mutation)
    assert not r.passed
    f = r.failures[0]
    assert f["law"] in r.failed_laws() and f["witness"]
    json.dumps(r.to_json())


def test_chain_rule_mutation_witness_has_the_maps():
    r = run_suite("cd5", CorpusConfig(count=30), mutation="d-origin-partials")
    w = r.failures[0]["witness"]
    assert {"lhs", "rhs", "point", "inputs"} <= set(w)
    assert {"f", "g"} <= set(w["inputs"])


def test_mutation_table_is_documented():
    assert len(MUTATIONS) == 5
    assert all(isinstance(doc, str) and doc for doc, _ in MUTATIONS.values())


def test_float_report_carries_deviation():
    r = run_suite("cd3", CorpusConfig(count=5, flavor=Flavor.FLOAT), mutation="d-doubled")
    w = next(f["witness"] for f in r.failures if f["law"].startswith("cd3"))
    assert "deviation" in w and "point" in w


def test_biproduct_suite_finds_maps_linear_in_first():
    r = run_suite("biproduct", CorpusConfig(count=30))
    assert r.laws["linear-in-first-ignores-second"]["checked"] > 0


def test_matrix_maps_are_linear():
    rng = np.random.default_rng(0)
    a = LinMorph.from_rows(rng.integers(-3, 4, size=(3, 2)).tolist())
    assert is_linear(matrix_morph(a))
