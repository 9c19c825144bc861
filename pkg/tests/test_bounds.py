import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from gesq.bounds import (
    BoundsReport,
    ExtensionFamily,
    ScheduleEntry,
    _extrapolate,
    analytic_oracle,
    channel_lower_bound,
    channel_upper_bound,
    extremality_residual,
    extremality_test,
    factorize_state,
    half_beam_splitter,
    lower_bound_point,
    optimize_squash_squeezing,
    sigma_cd,
    squashed_covariance,
    state_lower_bound,
    state_upper_bound,
    upper_bound_point,
)
from gesq.entropy import conditional_mutual_information, g
from gesq.errors import HalfEigenvalueWarning, InvalidArgumentError, UnsupportedDegenerateError
from gesq.gaussian import (
    GaussianChannel,
    GaussianState,
    amplifier,
    attenuator,
    squeezer_symplectic,
    tmsv,
    two_mode_example,
)
from gesq.symplectic import block_decompose, direct_sum, is_symplectic, symplectic_eigenvalues
from helpers import random_extreme_output, random_symplectic

# Values from tests/oracles/block_det_oracle.py (40-digit mpmath, independent of the package)
FIXTURE_LB = 1.0895604430111633244  # two-mode example, N=10, eta=(0.5, 0.25), env TMSV with 1 photon
FIXTURE_LB_VACUUM_ENV = 1.4213668988167397772  # same with a vacuum environment

SHORT_N = (1e1, 1e2, 1e3, 1e4, 1e5)
SHORT_T = (1e2, 1e3, 1e4, 1e5, 1e6)


def squeezer_state(kappa, e):
    s = squeezer_symplectic([kappa])
    return s @ np.diag([e + 0.5, e + 0.5, 0.5, 0.5]) @ s.T


# --- closed forms and extremality ------------------------------------------------

def test_analytic_oracle():
    assert analytic_oracle("attenuator", 0.5) == pytest.approx(math.log(3))
    assert analytic_oracle("amplifier", 2) == pytest.approx(math.log(3))
    for bad in (0.0, 1.0, 1.2):
        with pytest.raises(InvalidArgumentError):
            analytic_oracle("attenuator", bad)
    with pytest.raises(InvalidArgumentError):
        analytic_oracle("amplifier", 1.0)
    with pytest.raises(InvalidArgumentError):
        analytic_oracle("loss", 0.5)


@pytest.mark.parametrize("ch", [attenuator(0.3), attenuator([0.2, 0.9]), amplifier(2.5),
                                two_mode_example(0.5, 0.25, 2.0)])
def test_extreme_channels(ch):
    assert extremality_test(ch.k, ch.alpha)
    assert not extremality_test(ch.k, ch.alpha + 0.1 * np.eye(2 * ch.n))


def test_extremality_unitary_channel():
    k = squeezer_symplectic([2.0])
    assert extremality_test(k, np.zeros((4, 4)))
    assert not extremality_test(k, 0.01 * np.eye(4))


def test_extremality_degenerate_is_reported():
    k = np.diag([1.0, 1.0, 0.5, 0.5])
    alpha = np.diag([0.0, 0.0, 0.375, 0.375])
    with pytest.raises(UnsupportedDegenerateError):
        extremality_residual(k, alpha)


# --- state lower bound ---------------------------------------------------------------

@pytest.mark.parametrize("kappa", [1.2, 2.0, 10.0])
@pytest.mark.parametrize("e", [0.3, 1.0, 7.0])
def test_state_lower_bound_squeezer(kappa, e):
    assert state_lower_bound(squeezer_state(kappa, e)) == pytest.approx(math.log(2 * kappa - 1), abs=1e-10)


def test_state_lower_bound_product_state():
    sigma = np.diag([2.0, 2.0, 0.5, 0.5])
    assert state_lower_bound(sigma) == pytest.approx(0.0, abs=1e-12)


def test_state_lower_bound_regression_fixture():
    ch = two_mode_example(0.5, 0.25, 1.0)
    value, fac = lower_bound_point(ch, 10.0)
    assert fac.williamson_residual < 1e-8
    assert value == pytest.approx(FIXTURE_LB, abs=1e-10)
    value0, _ = lower_bound_point(two_mode_example(0.5, 0.25, 0.0), 10.0)
    assert value0 == pytest.approx(FIXTURE_LB_VACUUM_ENV, abs=1e-10)


def test_factorization_reconstructs_state():
    sigma = sigma_cd(two_mode_example(0.5, 0.25, 1.0), 10.0)
    fac = factorize_state(sigma)
    diag = np.diag(np.concatenate([np.repeat(fac.photons + 0.5, 2), np.full(4, 0.5)]))
    assert np.max(np.abs(fac.s @ diag @ fac.s.T - sigma)) < 1e-8 * np.linalg.norm(sigma, 2)
    assert fac.n_half == 2 and fac.half_deviation < 1e-8


def test_state_lower_bound_warns_without_half_eigenvalues():
    sigma = np.diag([2.0, 2.0, 1.0, 1.0])
    with pytest.warns(HalfEigenvalueWarning):
        state_lower_bound(sigma)


def test_state_lower_bound_rejects_bad_shape():
    with pytest.raises(InvalidArgumentError):
        state_lower_bound(np.eye(2))


# --- state upper bound -------------------------------------------------------------

@pytest.mark.parametrize("kappa", [1.5, 2.0, 6.0])
def test_state_upper_bound_at_zero_photons(kappa):
    blocks = block_decompose(squeezer_symplectic([kappa]))
    # the tail is 2n and each Y contributes (1/4) ln det(B2 B2^T / 2) with (1/2)^2 prefactor
    expected = 2.0 + math.log((2 * kappa - 1) / 4.0)
    assert state_upper_bound(blocks, [0.0]) == pytest.approx(expected, abs=1e-12)


def test_state_upper_bound_frozen_value():
    blocks = block_decompose(squeezer_symplectic([2.0]))
    assert state_upper_bound(blocks, [0.0]) == pytest.approx(2.0 + math.log(3) - 2 * math.log(2), abs=1e-12)


@pytest.mark.parametrize("kappa", [1.2, 2.0, 10.0])
def test_state_upper_bound_matches_balanced_extension(kappa):
    blocks = block_decompose(squeezer_symplectic([kappa]))
    for e in (0.0, 0.5, 3.0, 40.0):
        fam = ExtensionFamily([0.5], [e])
        assert state_upper_bound(blocks, [e]) == pytest.approx(fam.upper_bound(blocks), abs=1e-10)


def _extension_half_cmi(s, eta, e):
    # exact (1/2) I(C:D|R) for the state obtained by attenuating the reference arm
    n = len(e)
    fam = ExtensionFamily(eta, e)
    ar = fam.reference_covariance()
    full = direct_sum(ar, 0.5 * np.eye(2 * n))
    # reorder to A, B, R and apply S to A, B
    idx = np.r_[0:2 * n, 4 * n:6 * n, 2 * n:4 * n]
    full = full[np.ix_(idx, idx)]
    u = direct_sum(s, np.eye(2 * n))
    labels = [f"C{i}" for i in range(n)] + [f"D{i}" for i in range(n)] + [f"R{i}" for i in range(n)]
    st_ = GaussianState(labels, np.zeros(6 * n), u @ full @ u.T)
    return 0.5 * conditional_mutual_information(st_, labels[:n], labels[n:2 * n], labels[2 * n:])


@pytest.mark.parametrize("kappa", [1.5, 3.0])
@pytest.mark.parametrize("e", [0.5, 2.0, 10.0])
def test_state_upper_bound_dominates_exact_extension_value(kappa, e):
    s = squeezer_symplectic([kappa])
    exact = _extension_half_cmi(s, [0.5], [e])
    assert exact <= state_upper_bound(block_decompose(s), [e]) + 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.0, 1.0), st.floats(0.1, 5.0))
def test_extension_family_dominates_exact_value(seed, eta, e):
    s = random_symplectic(2, np.random.default_rng(seed), 0.3)
    blocks = block_decompose(s)
    exact = _extension_half_cmi(s, [eta], [e])
    assert exact <= ExtensionFamily([eta], [e]).upper_bound(blocks) + 1e-8


def test_state_upper_bound_dominates_lower_bound_grid():
    for kappa in (1.2, 1.5, 2.0, 5.0, 10.0):
        blocks = block_decompose(squeezer_symplectic([kappa]))
        for e in (0.1, 0.5, 1.0, 5.0, 20.0, 100.0):
            assert state_upper_bound(blocks, [e]) >= math.log(2 * kappa - 1)


@pytest.mark.parametrize("kappa", [1.2, 2.0, 10.0])
def test_state_upper_bound_nonincreasing_in_photons(kappa):
    blocks = block_decompose(squeezer_symplectic([kappa]))
    vals = [state_upper_bound(blocks, [e]) for e in np.linspace(0.0, 30.0, 61)]
    assert np.all(np.diff(vals) <= 1e-12)


def test_state_upper_bound_input_checks():
    blocks = block_decompose(squeezer_symplectic([2.0]))
    with pytest.raises(InvalidArgumentError):
        state_upper_bound(blocks, [1.0, 1.0])
    with pytest.raises(InvalidArgumentError):
        state_upper_bound(blocks, [-1.0])
    with pytest.raises(InvalidArgumentError):
        ExtensionFamily([1.5], [1.0])


# --- extrapolation -----------------------------------------------------------------

def test_extrapolation_exact_on_first_order_sequence():
    rep = BoundsReport("lower", [ScheduleEntry(p, 2.0 - 3.0 / p) for p in (1e4, 1e5, 1e6)])
    _extrapolate(rep)
    assert rep.limit == pytest.approx(2.0, abs=1e-13)
    assert rep.converged and rep.residual <= rep.conv_tol


def test_extrapolation_drops_noisy_tail():
    vals = [1.0 - 1.0 / p for p in (10, 100, 1000, 1e4)] + [1.0 + 1e-3]
    params = [10, 100, 1000, 1e4, 1e5]
    rep = _extrapolate(BoundsReport("upper", [ScheduleEntry(p, v) for p, v in zip(params, vals)]))
    assert len(rep.flagged) == 1 and rep.flagged[0].param == 1e5
    assert rep.limit == pytest.approx(1.0, abs=1e-12)


def test_extrapolation_not_converged():
    rep = _extrapolate(BoundsReport("lower", [ScheduleEntry(p, math.log(p)) for p in (10, 100)]))
    assert not rep.converged and rep.residual > rep.conv_tol


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=2, max_size=7), st.floats(1e-8, 1e-2))
def test_converged_implies_small_residual(values, tol):
    params = [10.0**k for k in range(1, len(values) + 1)]
    rep = _extrapolate(BoundsReport("lower", [ScheduleEntry(p, v) for p, v in zip(params, values)],
                                    conv_tol=tol))
    if rep.converged:
        assert rep.residual <= tol
    assert all(math.isfinite(v) for _, v in rep.schedule)


def test_report_serialization():
    rep = channel_lower_bound(attenuator(0.5), SHORT_N)
    d = json.loads(rep.to_json())
    assert d["kind"] == "lower" and len(d["schedule"]) == len(rep.schedule)
    rows = rep.csv_rows()
    assert rows[0][0] == "lower" and len(rows[0]) == 6


# --- channel lower bound -----------------------------------------------------------

def test_attenuator_lower_bound_point_closed_form():
    eta = 0.5
    for n_ph in (1.0, 3.0, 100.0):
        kp = (n_ph + 1) / ((1 - eta) * n_ph + 1)
        value, _ = lower_bound_point(attenuator(eta), n_ph)
        assert value == pytest.approx(math.log(2 * kp - 1), abs=1e-10)
    assert lower_bound_point(attenuator(0.5), 1.0)[0] == pytest.approx(math.log(5 / 3), abs=1e-12)


@pytest.mark.parametrize("ch,kind,p", [(attenuator(0.5), "attenuator", 0.5),
                                       (amplifier(2.0), "amplifier", 2.0)])
def test_lower_bound_limit(ch, kind, p):
    rep = channel_lower_bound(ch)
    assert rep.converged
    assert rep.limit == pytest.approx(analytic_oracle(kind, p), abs=1e-6)


@pytest.mark.parametrize("ch", [attenuator(0.3), attenuator(0.8), amplifier(1.5), amplifier(4.0)])
def test_lower_bound_nondecreasing_in_n(ch):
    vals = [v for _, v in channel_lower_bound(ch).schedule]
    assert np.all(np.diff(vals) >= -1e-9)


def test_lower_bound_warns_for_non_extreme():
    ch = GaussianChannel(np.sqrt(0.5) * np.eye(2), np.eye(2))
    with pytest.warns(HalfEigenvalueWarning):
        channel_lower_bound(ch, SHORT_N)


def test_lower_bound_rejects_bad_schedule():
    for sched in ([], [10, 5], [-1, 10]):
        with pytest.raises(InvalidArgumentError):
            channel_lower_bound(attenuator(0.5), sched)


def test_sigma_cd_is_a_state_with_half_eigenvalues():
    sigma = sigma_cd(amplifier([2.0, 3.0]), 50.0)
    nu = symplectic_eigenvalues(sigma)
    assert nu[:2] == pytest.approx([0.5, 0.5], abs=1e-8)


# --- channel upper bound -----------------------------------------------------------

def test_half_beam_splitter_is_symplectic():
    assert is_symplectic(half_beam_splitter(2))


def test_squashed_covariance_requires_dilation():
    ch = GaussianChannel(np.sqrt(0.5) * np.eye(2), 0.25 * np.eye(2))
    with pytest.raises(InvalidArgumentError):
        squashed_covariance(ch, 100.0)
    with pytest.raises(InvalidArgumentError):
        channel_upper_bound(ch)


def test_squashing_state_mode_count_checked():
    with pytest.raises(InvalidArgumentError):
        squashed_covariance(attenuator(0.5), 100.0, tmsv(1.0))


@pytest.mark.parametrize("ch,kind,p", [(attenuator(0.5), "attenuator", 0.5),
                                       (amplifier(2.0), "amplifier", 2.0)])
def test_upper_bound_limit(ch, kind, p):
    rep = channel_upper_bound(ch)
    assert rep.converged
    assert rep.limit == pytest.approx(analytic_oracle(kind, p), abs=1e-6)


@pytest.mark.parametrize("ch", [attenuator(0.5), amplifier(2.0), two_mode_example(0.5, 0.25, 0.0),
                                two_mode_example(0.5, 0.5, 1.0)])
def test_upper_bound_stabilizes(ch):
    assert abs(upper_bound_point(ch, 1e8) - upper_bound_point(ch, 1e7)) <= 1e-4


@pytest.mark.parametrize("ch", [attenuator(0.2), amplifier(3.0), two_mode_example(0.5, 0.25, 0.5),
                                two_mode_example(0.7, 0.3, 0.0)])
def test_lower_not_above_upper(ch):
    lb = channel_lower_bound(ch)
    ub = channel_upper_bound(ch)
    assert lb.limit <= ub.limit + 1e-6


def test_optimizer_vacuum_environment():
    ch = two_mode_example(0.5, 0.25, 0.0)
    ns, rep = optimize_squash_squeezing(ch, schedule=SHORT_T)
    assert ns == pytest.approx(0.0, abs=1e-6)
    assert rep.limit == pytest.approx(math.log(3) + math.log(5 / 3), abs=1e-4)
    assert rep.extras["n_s"] == ns


def test_optimizer_improves_on_vacuum_squashing():
    ch = two_mode_example(0.5, 0.5, 1.0)
    ns, rep = optimize_squash_squeezing(ch, schedule=SHORT_T)
    fixed = channel_upper_bound(ch, None, SHORT_T)
    assert ns > 0
    assert rep.limit < fixed.limit


def test_optimizer_respects_ns_max():
    ch = two_mode_example(0.5, 0.5, 2.0)
    ns, _ = optimize_squash_squeezing(ch, ns_max=0.5, schedule=SHORT_T)
    assert 0.0 <= ns <= 0.5


def test_optimizer_needs_two_mode_environment():
    with pytest.raises(InvalidArgumentError):
        optimize_squash_squeezing(attenuator(0.5))


# --- half-eigenvalue structure ---------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_extreme_channel_outputs_have_half_eigenvalues(seed, n):
    out = random_extreme_output(n, np.random.default_rng(seed))
    assume(out is not None)
    nu = symplectic_eigenvalues(out)
    assert np.sum(np.abs(nu - 0.5) <= 1e-7) >= n


def test_frozen_fixture_matches_oracle():
    pytest.importorskip("mpmath")
    import importlib.util
    from pathlib import Path

    path = Path(__file__).parent / "oracles" / "block_det_oracle.py"
    spec = importlib.util.spec_from_file_location("block_det_oracle", path)
    oracle = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(oracle)
    lb = oracle.lower_bound(oracle.two_mode_sigma_cd(10, 10, "0.5", "0.25", 1))[0]
    lb0 = oracle.lower_bound(oracle.two_mode_sigma_cd(10, 10, "0.5", "0.25", 0))[0]
    assert float(lb) == pytest.approx(FIXTURE_LB, abs=1e-15)
    assert float(lb0) == pytest.approx(FIXTURE_LB_VACUUM_ENV, abs=1e-15)
