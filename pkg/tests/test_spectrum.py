import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dhlab.grid import log_grid, uniform_grid
from dhlab.operator import HankelOperator, KernelMatrix, assemble_distorted, assemble_weighted_hankel
from dhlab.spectrum import (
    ConvergenceError,
    SingularSpectrum,
    block_additivity_defect,
    dense_singular_values,
    dual_element,
    hs_norm_quadrature,
    monotonicity_violations,
    schatten,
    topk_singular_values,
    trace_pair,
)
from dhlab.symbol import exp_symbol, indicator_phi_n

G = log_grid(-8, 3, 8)


def _sp(vals):
    return SingularSpectrum(np.array(vals, dtype=float), noise_floor=0.0)


def test_schatten_examples():
    assert schatten(_sp([4, 3]), 2) == pytest.approx(5.0)
    assert schatten(_sp([4, 3]), math.inf) == 4.0
    assert schatten(_sp([4, 3]), 1) == pytest.approx(7.0)
    assert schatten(_sp([1, 1, 1, 1]), 0.5) == pytest.approx(16.0)
    for p in (0, -1):
        with pytest.raises(ValueError):
            schatten(_sp([1.0]), p)


def test_schatten_large_p_no_overflow():
    assert schatten(_sp([1e200, 1e200]), 8) == pytest.approx(1e200 * 2 ** (1 / 8))


def test_noise_floor_excludes_rounding():
    sp = SingularSpectrum(np.array([1.0, 1e-17, 1e-18]), dim=3)
    assert sp.noise_floor == pytest.approx(np.finfo(float).eps * 3)
    assert schatten(sp, 0.5) == pytest.approx(1.0)


def test_spectrum_validation():
    with pytest.raises(ValueError):
        SingularSpectrum(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        SingularSpectrum(np.array([1.0, -1.0]))


def test_dense_zero_matrix():
    sp = dense_singular_values(KernelMatrix(G, G, np.zeros((len(G), len(G)))))
    assert np.all(sp.values == 0)
    assert schatten(sp, 1) == 0.0


def test_dense_rank_one():
    rng = np.random.default_rng(0)
    u, v = rng.standard_normal(30), rng.standard_normal(20)
    sp = dense_singular_values(np.outer(u, v))
    assert sp.values[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-14)
    assert np.all(sp.values[1:] <= sp.noise_floor)


def test_dense_closed_form_s0():
    g = log_grid(-10, 4, 16)
    sp = dense_singular_values(assemble_distorted(exp_symbol(), 2, 2, g, g))
    assert sp.values[0] == pytest.approx(0.5 * math.sqrt(math.pi / 2), abs=1e-3)
    assert sp.source == "dense"


def test_lanczos_rank_one():
    rng = np.random.default_rng(1)
    u, v = rng.standard_normal(50), rng.standard_normal(40)
    a = np.outer(u, v)
    sp = topk_singular_values(lambda x: a @ x, lambda y: a.T @ y, a.shape, 3)
    assert sp.values[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v), rel=1e-10)
    assert np.all(sp.values[1:] <= 1e-10 * sp.values[0])


def test_lanczos_matches_dense_hankel_512():
    g = uniform_grid(0.0, 8.0, 512)
    op = HankelOperator(indicator_phi_n(4), g, -0.25, 0.0)
    dense = dense_singular_values(op.dense()).values[:10]
    sp = topk_singular_values(op.matvec, op.rmatvec, op.shape, 10, tol=1e-10)
    np.testing.assert_allclose(sp.values[:10], dense, rtol=1e-8)
    assert sp.source.startswith("iterative")


def test_lanczos_rank_one_hankel():
    g = uniform_grid(0.0, 8.0, 512)
    op = HankelOperator(exp_symbol(), g)
    dense = dense_singular_values(op.dense()).values
    sp = topk_singular_values(op.matvec, op.rmatvec, op.shape, 4)
    assert sp.values[0] == pytest.approx(dense[0], rel=1e-12)
    assert np.all(sp.values[1:] <= 1e-12 * dense[0])


def test_lanczos_k_beyond_rank():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((60, 3)) @ rng.standard_normal((3, 45))
    sp = topk_singular_values(lambda x: a @ x, lambda y: a.T @ y, a.shape, 6)
    dense = np.linalg.svd(a, compute_uv=False)
    np.testing.assert_allclose(sp.values[:3], dense[:3], rtol=1e-10)
    assert np.all(sp.values[3:] <= 1e-10 * sp.values[0])


def test_lanczos_reports_nonconvergence():
    a = np.random.default_rng(3).standard_normal((300, 200))
    with pytest.raises(ConvergenceError) as info:
        topk_singular_values(lambda x: a @ x, lambda y: a.T @ y, a.shape, 20, tol=1e-14, max_steps=30)
    assert len(info.value.residuals) > 0


def test_hs_quadrature_examples():
    g = log_grid(-20, 6, 16)
    assert hs_norm_quadrature(lambda x, y: 0 * x * y, g, g) == 0.0
    assert hs_norm_quadrature(lambda x, y: np.exp(-x - y), g, g) == pytest.approx(0.5, abs=1e-4)
    m = assemble_weighted_hankel(exp_symbol(), 0, 0, g, g)
    assert np.linalg.norm(m.entries) == pytest.approx(hs_norm_quadrature(m.kernel, g, g), rel=1e-14)
    with pytest.raises(FloatingPointError):
        hs_norm_quadrature(lambda x, y: 1.0 / (x - 1.0) + 0 * y, log_grid(0, 1, 2), g)


def test_trace_pair_examples():
    g = log_grid(-20, 6, 16)
    a = assemble_distorted(exp_symbol(), 1, 1, g, g)
    assert trace_pair(a, a).real == pytest.approx(np.sum(a.entries**2), rel=1e-14)
    zero = a.with_entries(np.zeros(a.shape), "zero")
    assert trace_pair(a, zero) == 0
    sw = np.sqrt(g.weights)
    b = KernelMatrix(g, g, np.outer(sw * np.exp(-g.points), sw * np.exp(-g.points)), "rank one")
    assert trace_pair(a, b).real == pytest.approx(0.25, abs=1e-4)
    with pytest.raises(ValueError):
        trace_pair(a, assemble_distorted(exp_symbol(), 1, 1, G, G))


def test_schatten2_equals_hs():
    m = assemble_weighted_hankel(indicator_phi_n(8), -0.25, 0.0, G, G)
    assert schatten(dense_singular_values(m), 2) == pytest.approx(
        hs_norm_quadrature(m.kernel, G, G), rel=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, 8.0, math.inf])
def test_dual_element_norms(p):
    rng = np.random.default_rng(4)
    a = rng.standard_normal((12, 9))
    z = dual_element(a, p)
    sa = dense_singular_values(a)
    pc = 1.0 if math.isinf(p) else (math.inf if p == 1 else p / (p - 1))
    assert np.sum(a * z) == pytest.approx(schatten(sa, p), rel=1e-12)
    assert schatten(dense_singular_values(z), pc) == pytest.approx(1.0, rel=1e-12)


def test_block_additivity():
    rng = np.random.default_rng(5)
    blocks = [rng.standard_normal((k, k + 1)) for k in (3, 4, 5)]
    whole = np.zeros((12, 15))
    r = c = 0
    for b in blocks:
        whole[r: r + b.shape[0], c: c + b.shape[1]] = b
        r, c = r + b.shape[0], c + b.shape[1]
    perm_r, perm_c = rng.permutation(12), rng.permutation(15)
    ws = dense_singular_values(whole[perm_r][:, perm_c])
    bs = [dense_singular_values(b) for b in blocks]
    for p in (0.5, 1, 2, 4, 8):
        assert block_additivity_defect(ws, bs, p) < 1e-10


finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=finite))
def test_monotonicity_property(a):
    sp = dense_singular_values(a)
    assert monotonicity_violations(sp) == 0
    assert np.all(np.diff(sp.values) <= 0) and np.all(sp.values >= 0)


@settings(max_examples=40, deadline=None)
@given(arrays(float, st.tuples(st.integers(2, 10), st.integers(2, 10)), elements=finite),
       st.integers(0, 2**31))
def test_orthogonal_invariance(a, seed):
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.standard_normal((a.shape[0],) * 2))
    q2, _ = np.linalg.qr(rng.standard_normal((a.shape[1],) * 2))
    s1 = dense_singular_values(a).values
    s2 = dense_singular_values(q1 @ a @ q2).values
    assert np.max(np.abs(s1 - s2)) <= 1e-12 * max(s1[0], 1.0)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=20), st.floats(0.3, 10.0))
def test_schatten_homogeneous(vals, p):
    sp = _sp(sorted(vals, reverse=True))
    scaled = _sp(sorted([3.0 * v for v in vals], reverse=True))
    assert schatten(scaled, p) == pytest.approx(3.0 * schatten(sp, p), rel=1e-12, abs=1e-300)
