import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bump_v
from dhlab.grid import log_grid, integrate
from dhlab.symbol import (
    bump,
    dilate,
    exp_symbol,
    indicator_phi_n,
    parse_symbol,
    power_weight,
    support_octaves,
    tabulated,
    zero_symbol,
)


def test_phi_n_values():
    p1 = indicator_phi_n(1)
    assert p1(2.0) == 1.0 and p1(3.5) == 0.0
    p8 = indicator_phi_n(8)
    assert p8(1.1) == 1.0 and p8(1.3) == 0.0


def test_phi_n_endpoint_convention():
    p = indicator_phi_n(4)
    assert p(1.0) == 0.0  # open on the left
    assert p(1.5) == 1.0  # closed on the right
    assert p.support == (1.0, 1.5)
    assert p.jumps == (1.0, 1.5)


def test_phi_n_integral():
    g = log_grid(-1, 2, 4096)
    assert integrate(g, indicator_phi_n(4)) == pytest.approx(0.5, abs=1e-3)


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_phi_n_rejects(n):
    with pytest.raises(ValueError):
        indicator_phi_n(n)


def test_exp_symbol():
    e = exp_symbol()
    assert e(1e-15) == pytest.approx(1.0)
    assert e(np.log(2.0)) == pytest.approx(0.5, rel=1e-15)


def test_bump_support_and_partition():
    assert bump(1)(0.25) == 0.0
    assert bump(4).support == (2.0, 8.0)
    t = 1.3
    total = bump(1)(t) + sum(bump(2.0**j)(t) for j in range(-4, 5) if j != 0)
    assert total == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        bump(0)


def test_bump_matches_independent_partition():
    t = np.linspace(0.3, 2.5, 301)
    np.testing.assert_allclose(bump(1)(t), bump_v(t), atol=1e-14)


def test_power_weight_examples():
    e = exp_symbol()
    assert power_weight(e, 0) is e
    assert power_weight(indicator_phi_n(4), 1)(1.25) == pytest.approx(1.25)
    assert power_weight(bump(1), -1)(1.0) == pytest.approx(bump(1)(1.0))


def test_zero_symbol():
    z = zero_symbol()
    assert z.is_zero()
    assert np.all(z(np.linspace(0.1, 10, 7)) == 0)


def test_support_spot_check():
    # eval is exactly zero outside the declared support at 16 points
    rng = np.random.default_rng(3)
    for phi in (bump(0.7), indicator_phi_n(5), dilate(bump(1), 3.0), power_weight(bump(2), 1.5)):
        lo, hi = phi.support
        outside = np.concatenate([rng.uniform(1e-3, lo * 0.999, 8), rng.uniform(hi * 1.001, hi * 4, 8)])
        assert np.all(phi(outside) == 0.0)


def test_tabulated_symbol():
    s = tabulated([1.0, 2.0, 4.0], [1.0, 3.0, 5.0])
    np.testing.assert_allclose(s([1.5, 3.0, 5.0, 0.5]), [2.0, 4.0, 0.0, 0.0])
    sl = tabulated([1.0, 2.0, 4.0], [1.0, 3.0, 5.0], log=True)
    assert sl(np.sqrt(2.0)) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        tabulated([2.0, 1.0], [0.0, 0.0])


def test_parse_symbol():
    assert parse_symbol("exp")(0.0) == 1.0
    assert parse_symbol("phi_n:8")(1.1) == 1.0
    assert parse_symbol("bump:2").support == (1.0, 4.0)
    assert parse_symbol("phi_n:4*t^2")(1.25) == pytest.approx(1.5625)
    assert parse_symbol("zero").is_zero()
    for bad in ("gauss", "phi_n:2.5", "bump:x", "exp:3"):
        with pytest.raises(ValueError, match="unknown symbol"):
            parse_symbol(bad)


def test_support_octaves():
    assert support_octaves(bump(1)) == (-1, 1)
    assert support_octaves(indicator_phi_n(8)) == (0, 1)
    assert support_octaves(exp_symbol()) is None


lams = st.floats(0.01, 100.0)
sample_t = st.lists(st.floats(1e-3, 400.0), min_size=1, max_size=16)


@settings(max_examples=80, deadline=None)
@given(lams, sample_t)
def test_dilation_exact(lam, ts):
    t = np.array(ts)
    np.testing.assert_array_equal(bump(2 * lam)(t), bump(lam)(t / 2))


@settings(max_examples=80, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), sample_t)
def test_power_weight_composes(a, b, ts):
    t = np.array(ts)
    phi = exp_symbol()
    lhs = power_weight(power_weight(phi, a), b)(t)
    rhs = power_weight(phi, a + b)(t)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-14, atol=0)
