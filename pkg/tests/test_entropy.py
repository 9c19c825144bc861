import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gesq.entropy import (
    conditional_entropy,
    conditional_mutual_information,
    entropy,
    entropy_cov,
    entropy_from_nu,
    g,
    g_of_shifted_symplectic_asymptotic,
    mutual_information,
)
from gesq.errors import InvalidArgumentError
from gesq.gaussian import (
    GaussianState,
    apply_channel,
    apply_symplectic,
    attenuator,
    reorder_modes,
    tensor,
    thermal_state,
    tmsv,
    vacuum_state,
)
from gesq.symplectic import symplectic_eigenvalues
from helpers import random_spd, random_state_cov, random_symplectic

seeds = st.integers(0, 2**32 - 1)


def _state(sigma, labels=None):
    n = sigma.shape[0] // 2
    labels = labels or [f"m{i}" for i in range(n)]
    return GaussianState(labels, np.zeros(2 * n), sigma)


def test_g_values():
    assert g(0) == 0.0
    assert g(1) == pytest.approx(2 * math.log(2), rel=1e-14)
    assert g(-1e-13) == 0.0
    with pytest.raises(InvalidArgumentError):
        g(-1e-6)


def test_g_array():
    out = g(np.array([0.0, 1.0, 3.0]))
    assert out == pytest.approx([0.0, 2 * math.log(2), 4 * math.log(4) - 3 * math.log(3)])


def test_g_large_argument():
    x = 1e9
    assert g(x) - (math.log(x) + 1) == pytest.approx(1 / (2 * x), rel=1e-6)


@pytest.mark.parametrize("x", [2e8, 1e10, 1e14])
def test_g_series_matches_high_precision(x):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 40
    xm = mpmath.mpf(x)
    exact = (xm + 1) * mpmath.log(xm + 1) - xm * mpmath.log(xm)
    assert g(x) == pytest.approx(float(exact), rel=1e-15)


def test_g_continuous_at_branch_switch():
    lo, hi = g(1e8 * (1 - 1e-12)), g(1e8 * (1 + 1e-12))
    assert abs(hi - lo) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_g_increasing_and_concave(x):
    h = 1e-3 * x
    assert g(x + h) > g(x)
    assert g(x + h) + g(x - h) <= 2 * g(x) + 1e-12 * g(x)


def test_entropy_examples():
    assert entropy(vacuum_state(2)) == pytest.approx(0.0, abs=1e-12)
    assert entropy(thermal_state([2.0])) == pytest.approx(g(2.0))
    assert entropy(tmsv(5.0)) == pytest.approx(0.0, abs=1e-8)


def test_entropy_clip():
    assert entropy_from_nu([0.5 - 1e-10]) == 0.0
    with pytest.raises(InvalidArgumentError):
        entropy_from_nu([0.49])


def test_conditional_entropy_examples():
    prod = tensor(thermal_state([1.0], ["A"]), thermal_state([3.0], ["B"]))
    assert conditional_entropy(prod, "A", "B") == pytest.approx(g(1.0))
    assert conditional_entropy(tmsv(2.0), "A", "R") == pytest.approx(-g(2.0))
    with pytest.raises(InvalidArgumentError):
        conditional_entropy(prod, ["A"], ["A", "B"])


@pytest.mark.parametrize("eta", [0.2, 0.5, 0.8])
def test_conditional_entropy_attenuated_tmsv(eta):
    e = 3.0
    st_ = apply_channel(attenuator(eta), tmsv(e), ["R"])
    expected = g((1 - eta) * e) - g(eta * e)
    assert conditional_entropy(st_, "A", "R") == pytest.approx(expected, abs=1e-10)
    if eta == 0.5:
        assert abs(conditional_entropy(st_, "A", "R")) < 1e-10


def test_mutual_information_examples():
    prod = tensor(thermal_state([1.0], ["A"]), thermal_state([3.0], ["B"]))
    assert mutual_information(prod, "A", "B") == pytest.approx(0.0, abs=1e-12)
    assert mutual_information(tmsv(2.0), "A", "R") == pytest.approx(2 * g(2.0))
    joint = tensor(tmsv(1.5), thermal_state([0.7], ["Q"]))
    assert conditional_mutual_information(joint, "A", "R", "Q") == pytest.approx(2 * g(1.5))


def test_asymptotic_helper():
    t = 1e6
    assert g_of_shifted_symplectic_asymptotic(np.eye(2) / 2, t, 0) == pytest.approx(g(t / 2 - 0.5))
    with pytest.raises(InvalidArgumentError):
        g_of_shifted_symplectic_asymptotic(np.eye(2), -1.0, 0)
    with pytest.raises(InvalidArgumentError):
        g_of_shifted_symplectic_asymptotic(-np.eye(2), 1.0, 0)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_asymptotic_ratio(seed):
    rng = np.random.default_rng(seed)
    u = random_spd(2, rng, cond=10.0)
    a = rng.normal(size=(4, 4))
    v = a + a.T
    t = 1e6
    nu = symplectic_eigenvalues(t * u + v)
    for i in range(2):
        ratio = g(nu[i] - 0.5) / g_of_shifted_symplectic_asymptotic(u, t, i)
        assert abs(ratio - 1) < 1e-3


# --- properties -----------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 4))
def test_entropy_nonnegative_and_invariant(seed, n):
    rng = np.random.default_rng(seed)
    st_ = _state(random_state_cov(n, rng))
    s = entropy(st_)
    assert s >= 0
    assert entropy(apply_symplectic(random_symplectic(n, rng), st_)) == pytest.approx(s, abs=1e-9)
    perm = [int(i) for i in rng.permutation(n)]
    assert entropy(reorder_modes(st_, perm)) == pytest.approx(s, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_pure_states_have_zero_entropy(seed, n):
    s = random_symplectic(n, np.random.default_rng(seed))
    assert entropy_cov(0.5 * s @ s.T) == pytest.approx(0.0, abs=1e-8)


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(1, 2), st.integers(1, 2))
def test_subadditivity(seed, na, nb):
    st_ = _state(random_state_cov(na + nb, np.random.default_rng(seed)))
    a, b = list(range(na)), list(range(na, na + nb))
    assert mutual_information(st_, a, b) >= -1e-9


def test_conditioning_on_vacuum_side():
    st_ = tensor(thermal_state([2.0], ["R"]), vacuum_state(1, ["B"]))
    assert conditional_entropy(st_, "B", "R") == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_conditional_entropy_sum_grows_with_covariance(seed):
    rng = np.random.default_rng(seed)
    sigma = random_state_cov(3, rng)
    a = rng.normal(size=(6, 6)) * rng.uniform(0.01, 1.0)
    st0 = _state(sigma, ["A", "B", "C"])
    st1 = _state(sigma + a @ a.T, ["A", "B", "C"])

    def h(s):
        return conditional_entropy(s, "A", "B") + conditional_entropy(s, "A", "C")

    assert h(st1) >= h(st0) - 1e-9
