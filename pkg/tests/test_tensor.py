import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigrecover import _layout
from sigrecover.tensor import (
    ShapeMismatchError, TruncatedTensor, add, basis_vector, bracket, euclidean_norm, exp, exp_vector,
    inner_product, is_group_like, log, scale, shuffle_defect, tensor_product, unit,
)

from conftest import dict_exp_vector, dict_mul, from_dict, random_group, random_tensor, to_dict

shapes = st.sampled_from([(1, 1), (1, 3), (2, 1), (2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (3, 4)])
seeds = st.integers(0, 2**32 - 1)


# ---------------------------------------------------------------- layout

@given(st.integers(1, 4), st.integers(1, 5), st.data())
def test_word_index_bijection(dim, depth, data):
    level = data.draw(st.integers(0, depth))
    idx = data.draw(st.integers(0, dim**level - 1))
    word = _layout.index_to_word(level, idx, dim)
    assert len(word) == level
    assert _layout.word_to_index(word, dim) == idx


def test_layout_lexicographic_order():
    # d=2 level 2: 11, 12, 21, 22
    assert [_layout.index_to_word(2, i, 2) for i in range(4)] == [(1, 1), (1, 2), (2, 1), (2, 2)]
    assert _layout.flat_position((2, 1), 2, 3) == 1 + 2 + 2
    assert _layout.total_size(3, 2) == 13
    with pytest.raises(ValueError):
        _layout.word_to_index((3,), 2)
    with pytest.raises(ValueError):
        _layout.flat_position((1, 1, 1), 2, 2)


# ---------------------------------------------------------------- construction

def test_unit_examples():
    u = unit(2, 2)
    assert [lv.tolist() for lv in u.levels] == [[1.0], [0.0, 0.0], [0.0, 0.0, 0.0, 0.0]]
    assert unit(1, 3).coeffs.tolist() == [1.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        unit(0, 2)
    with pytest.raises(ValueError):
        unit(2, 0)


def test_invariants_enforced():
    with pytest.raises(ValueError):
        TruncatedTensor(2, 2, np.zeros(6))
    with pytest.raises(ValueError):
        TruncatedTensor(2, 1, [1.0, np.nan, 0.0])
    with pytest.raises(ShapeMismatchError):
        TruncatedTensor.from_levels([[1.0], [0.0, 0.0], [0.0, 0.0, 0.0]])
    g = unit(2, 2)
    with pytest.raises(ValueError):
        g.coeffs[0] = 5.0  # immutable


def test_word_access():
    g = TruncatedTensor.from_levels([[1.0], [2.0, 3.0], [4.0, 5.0, 6.0, 7.0]])
    assert g[()] == 1.0
    assert g[(2,)] == 3.0
    assert g[(1, 2)] == 5.0
    assert g[(2, 1)] == 6.0
    assert g.with_coeff((2, 2), -1.0)[(2, 2)] == -1.0
    assert g[(2, 2)] == 7.0


# ---------------------------------------------------------------- product

def test_product_identity_example(rng):
    h = random_tensor(rng, 3, 3)
    assert tensor_product(unit(3, 3), h) == h
    assert tensor_product(h, unit(3, 3)) == h


def test_product_d1_hand_expansion():
    a, b, c, e = 0.3, -1.7, 2.5, 0.9
    g = TruncatedTensor(1, 2, [1.0, a, b])
    h = TruncatedTensor(1, 2, [1.0, c, e])
    assert tensor_product(g, h).coeffs.tolist() == pytest.approx([1.0, a + c, b + e + a * c], abs=1e-15)


def test_product_level1_additivity(rng):
    u, v = rng.standard_normal(2), rng.standard_normal(2)
    prod = tensor_product(exp_vector(u, 3), exp_vector(v, 3))
    np.testing.assert_allclose(prod.level(1), u + v, atol=1e-15)


@given(shapes, seeds)
def test_product_matches_word_oracle(shape, seed):
    dim, depth = shape
    rng = np.random.default_rng(seed)
    g, h = random_tensor(rng, dim, depth), random_tensor(rng, dim, depth)
    expect = from_dict(dict_mul(to_dict(g), to_dict(h), depth), dim, depth)
    np.testing.assert_allclose(tensor_product(g, h).coeffs, expect.coeffs, atol=1e-12)


@given(shapes, seeds)
def test_product_associative(shape, seed):
    dim, depth = shape
    rng = np.random.default_rng(seed)
    g, h, k = (random_tensor(rng, dim, depth) for _ in range(3))
    lhs = tensor_product(tensor_product(g, h), k)
    rhs = tensor_product(g, tensor_product(h, k))
    np.testing.assert_allclose(lhs.coeffs, rhs.coeffs, atol=1e-12 * max(1.0, np.abs(lhs.coeffs).max()))


def test_product_shape_mismatch():
    with pytest.raises(ShapeMismatchError):
        tensor_product(unit(2, 2), unit(2, 3))
    with pytest.raises(ShapeMismatchError):
        unit(2, 2) + unit(3, 2)


# ---------------------------------------------------------------- exp / log

def test_exp_examples():
    assert exp(TruncatedTensor.zeros(2, 3)) == unit(2, 3)
    e = exp(TruncatedTensor.from_vector([1.0, 0.0], 2))
    assert e.level(2).reshape(2, 2).tolist() == [[0.5, 0.0], [0.0, 0.0]]
    w = 0.5 * (tensor_product(basis_vector(1, 2, 2), basis_vector(2, 2, 2))
               - tensor_product(basis_vector(2, 2, 2), basis_vector(1, 2, 2)))
    ew = exp(w)
    assert ew.level(1).tolist() == [0.0, 0.0]
    assert ew.level(2).reshape(2, 2).tolist() == [[0.0, 0.5], [-0.5, 0.0]]
    with pytest.raises(ValueError):
        exp(unit(2, 2))


@given(shapes, seeds)
def test_exp_vector_matches_series_and_oracle(shape, seed):
    dim, depth = shape
    v = np.random.default_rng(seed).standard_normal(dim)
    fast = exp_vector(v, depth)
    series = exp(TruncatedTensor.from_vector(v, depth))
    oracle = from_dict(dict_exp_vector(v, depth), dim, depth)
    np.testing.assert_allclose(fast.coeffs, oracle.coeffs, atol=1e-13)
    np.testing.assert_allclose(series.coeffs, oracle.coeffs, atol=1e-13)


def test_log_examples():
    assert euclidean_norm(log(unit(2, 3))) == 0.0
    lg = log(exp_vector([3.0, -1.0], 3))
    np.testing.assert_allclose(lg.level(1), [3.0, -1.0], rtol=1e-12)
    assert np.abs(lg.coeffs[3:]).max() < 1e-12
    g = exp_vector([0.4, 1.1], 3)
    np.testing.assert_allclose(log(tensor_product(g, g)).level(1), [0.8, 2.2], rtol=1e-12)
    with pytest.raises(ValueError):
        log(TruncatedTensor.zeros(2, 2))


@given(shapes, seeds)
def test_exp_log_roundtrip_lie_elements(shape, seed):
    dim, depth = shape
    rng = np.random.default_rng(seed)
    v = random_tensor(rng, dim, depth, scale=0.5, level0=0.0)
    np.testing.assert_allclose(log(exp(v)).coeffs, v.coeffs, atol=1e-10)


@given(shapes, seeds)
def test_log_exp_roundtrip_group(shape, seed):
    dim, depth = shape
    g = random_group(np.random.default_rng(seed), dim, depth)
    np.testing.assert_allclose(exp(log(g)).coeffs, g.coeffs, atol=1e-10)


# ---------------------------------------------------------------- bracket

def test_bracket_examples(rng):
    g = random_tensor(rng, 2, 3, level0=0.0)
    assert euclidean_norm(bracket(g, g)) == 0.0
    b = bracket(basis_vector(1, 2, 2), basis_vector(2, 2, 2))
    assert b.level(2).reshape(2, 2).tolist() == [[0.0, 1.0], [-1.0, 0.0]]


@given(shapes, seeds)
def test_bracket_antisymmetry_and_jacobi(shape, seed):
    dim, depth = shape
    rng = np.random.default_rng(seed)
    g, h, k = (random_tensor(rng, dim, depth, level0=0.0) for _ in range(3))
    np.testing.assert_allclose(bracket(g, h).coeffs, -bracket(h, g).coeffs, atol=1e-12)
    jac = bracket(g, bracket(h, k)) + bracket(h, bracket(k, g)) + bracket(k, bracket(g, h))
    assert np.abs(jac.coeffs).max() < 1e-12


# ---------------------------------------------------------------- linear structure

def test_linear_examples():
    u = unit(2, 2)
    assert euclidean_norm(u - u) == 0.0
    assert inner_product(basis_vector(1, 2, 2), basis_vector(2, 2, 2)) == 0.0
    diff = exp_vector([1.0, 0.0], 2) - unit(2, 2)
    assert euclidean_norm(diff) ** 2 == pytest.approx(1.25, abs=1e-15)
    assert add(u, u) == scale(u, 2.0)


@given(shapes, seeds)
def test_norm_is_inner_product(shape, seed):
    rng = np.random.default_rng(seed)
    x = random_tensor(rng, *shape)
    assert euclidean_norm(x) ** 2 == pytest.approx(inner_product(x, x), rel=1e-13)


# ---------------------------------------------------------------- group-likeness

def test_group_like_examples(rng):
    assert is_group_like(unit(2, 3), 1e-12)
    assert is_group_like(exp_vector(rng.standard_normal(3), 3), 1e-12)
    assert not is_group_like(unit(2, 2).with_coeff((1, 1), 1.0), 1e-6)
    assert not is_group_like(TruncatedTensor.zeros(2, 2), 1e-6)


@given(shapes, seeds)
def test_products_of_exponentials_are_group_like(shape, seed):
    dim, depth = shape
    g = random_group(np.random.default_rng(seed), dim, depth, segments=4)
    assert is_group_like(g, 1e-9)
    if depth <= 3:
        assert shuffle_defect(g) < 1e-9


def test_shuffle_defect_detects_level3_violation(rng):
    g = random_group(rng, 2, 3)
    bad = g.with_coeff((1, 1, 1), g[(1, 1, 1)] + 0.1)
    assert is_group_like(bad, 1e-9)  # level-2 check cannot see it
    assert shuffle_defect(bad) == pytest.approx(0.3, rel=1e-9)  # <g,1><g,11> = <g, 3*111>
