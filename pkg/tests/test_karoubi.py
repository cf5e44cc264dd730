from __future__ import annotations

import numpy as np
import pytest

from cdiff.cdc import ObjectMismatch, compose, differentiate, from_texts, identity, matrix_morph, morph_equal
from cdiff.karoubi import (
    HomConditionViolated,
    LsMorph,
    LsObject,
    NotIdempotent,
    NotLinear,
    hom_witness,
    ls_compose,
    ls_differentiate,
    ls_equal,
    ls_identity,
    ls_make,
    ls_product,
    random_linear_idempotent,
    random_unimodular,
    split_linear_idempotent,
)
from cdiff.expr import Semiring
from cdiff.matrix import LinMorph

P = LinMorph.from_rows([[1, 0], [0, 0]])


def m(dom, *texts):
    return from_texts(dom, list(texts))


def test_object_must_carry_an_idempotent():
    with pytest.raises(NotIdempotent):
        LsObject(2, LinMorph.from_rows([[2, 0], [0, 1]]))
    with pytest.raises(ObjectMismatch):
        LsObject(3, P)


def test_trivial_idempotents_accept_everything():
    f = m(2, "x1^2 + x2", "3")
    g = ls_make(LsObject.trivial(2), LsObject.trivial(2), f)
    assert morph_equal(ls_differentiate(g).map, differentiate(f))


def test_zero_idempotents_need_vanishing_constant_term():
    zero1 = LsObject(1, LinMorph.zeros(1, 1))
    assert ls_make(zero1, zero1, m(1, "x1^2 - 3*x1")).map is not None
    with pytest.raises(HomConditionViolated) as info:
        ls_make(zero1, zero1, m(1, "x1 + 1"))
    assert "point" in info.value.witness


def test_projection_style_map_commutes():
    obj = LsObject(2, P)
    f = m(2, "x1^3", "0")
    assert ls_make(obj, obj, f).map is f
    with pytest.raises(HomConditionViolated):
        ls_make(obj, obj, m(2, "x1", "x1"))


def test_identity_is_the_idempotent():
    obj = LsObject(2, P)
    f = ls_make(obj, obj, m(2, "2*x1^2", "0"))
    assert ls_equal(ls_compose(f, ls_identity(obj)), f)
    assert ls_equal(ls_compose(ls_identity(obj), f), f)


def test_equality_is_modulo_idempotents():
    obj = LsObject(2, P)
    f = LsMorph(obj, obj, m(2, "x1", "0"))
    g = LsMorph(obj, obj, m(2, "x1 + x2", "x2"))
    assert ls_equal(f, g)


def test_compose_checks_objects():
    a, b = LsObject(2, P), LsObject.trivial(2)
    f = ls_make(a, a, m(2, "x1", "0"))
    g = ls_make(b, b, identity(2))
    with pytest.raises(ObjectMismatch):
        ls_compose(g, f)


def test_derivative_respects_product_idempotent():
    obj = LsObject(2, P)
    f = ls_make(obj, obj, m(2, "x1^2", "0"))
    df = ls_differentiate(f)
    assert df.src == ls_product(obj, obj)
    assert hom_witness(df.src, df.dst, df.map) is None


def test_split_identity_and_zero():
    obj = LsObject.trivial(2)
    tgt, r, s = split_linear_idempotent(obj, ls_identity(obj))
    assert tgt.idem == LinMorph.identity(2)
    assert morph_equal(r.map, identity(2)) and morph_equal(s.map, identity(2))
    zero = ls_make(obj, obj, matrix_morph(LinMorph.zeros(2, 2)))
    tgt, r, s = split_linear_idempotent(obj, zero)
    assert tgt.idem == LinMorph.zeros(2, 2)


def test_split_coordinate_projection():
    obj = LsObject.trivial(2)
    f = ls_make(obj, obj, matrix_morph(P))
    tgt, r, s = split_linear_idempotent(obj, f)
    assert tgt.idem == P
    assert ls_equal(ls_compose(s, r), f)
    assert ls_equal(ls_compose(r, s), ls_identity(tgt))


def test_split_rejects_bad_input():
    obj = LsObject.trivial(1)
    with pytest.raises(NotLinear):
        split_linear_idempotent(obj, ls_make(obj, obj, m(1, "x1^2")))
    with pytest.raises(NotIdempotent):
        split_linear_idempotent(obj, ls_make(obj, obj, m(1, "2*x1")))


def test_random_idempotents_are_exact():
    rng = np.random.default_rng(0)
    for n in range(1, 5):
        for _ in range(10):
            p, p_inv = random_unimodular(n, rng)
            assert p @ p_inv == LinMorph.identity(n)
            e = random_linear_idempotent(n, rng)
            assert e @ e == e
            en = random_linear_idempotent(n, rng, Semiring.NAT)
            assert en @ en == en and all(v >= 0 for v in en.vec())


def test_commuting_idempotents_split():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(1, 5))
        basis = random_unimodular(n, rng)
        e = random_linear_idempotent(n, rng, basis=basis)
        fm = random_linear_idempotent(n, rng, basis=basis)
        obj = LsObject(n, e)
        f = ls_make(obj, obj, matrix_morph(fm))
        tgt, r, s = split_linear_idempotent(obj, f)
        assert ls_equal(ls_compose(s, r), f)
        assert ls_equal(ls_compose(r, s), ls_identity(tgt))
        assert morph_equal(compose(s.map, r.map), matrix_morph(e @ fm))
