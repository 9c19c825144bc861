"""Squashed-entanglement bounds for Gaussian states and extreme Gaussian channels.

State level: a 2n+2n mode state ``U_S (omega_A(E) (x) vacuum_B) U_S^dagger``
is characterised by the Williamson factor ``S`` of its covariance; the lower
bound depends only on the block determinants of ``S`` and the upper bound on
the blocks and ``E``.

Channel level: the lower bound feeds half of a TMSV with ``N`` photons per
mode through the channel and lets ``N`` grow; the upper bound sends an
infinite-temperature input (covariance ``t I``) through the dilation,
squashes the environment output with a 50:50 beam splitter against an
auxiliary state ``sigma_F`` and lets ``t`` grow. Both limits are extrapolated
from a geometric schedule.
"""

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .entropy import entropy_cov, g
from .errors import (
    HalfEigenvalueWarning,
    InvalidArgumentError,
    NumericalFailure,
    UnsupportedDegenerateError,
)
from .gaussian import (
    GaussianChannel,
    GaussianState,
    _quad_indices,
    multimode_tmsv_cov,
    tmsv,
    vacuum_state,
)
from .symplectic import (
    BlockDecomposition,
    block_decompose,
    direct_sum,
    mode_permutation_matrix,
    symplectic_form,
    symplectic_inverse,
    williamson,
    z_matrix,
)

DEFAULT_N_SCHEDULE = tuple(10.0**k for k in range(1, 8))
DEFAULT_T_SCHEDULE = tuple(10.0**k for k in range(2, 9))
DEFAULT_CONV_TOL = 1e-5
EXTREMALITY_TOL = 1e-8
HALF_TOL = 1e-6


# --- closed forms ---------------------------------------------------------

def analytic_oracle(kind, param):
    """Closed-form squashed-entanglement value of the one-mode families.

    ``attenuator``: ``ln((1 + eta) / (1 - eta))`` for ``0 < eta < 1``.
    ``amplifier``: ``ln((kappa + 1) / (kappa - 1))`` for ``kappa > 1``.
    """
    p = float(param)
    if kind == "attenuator":
        if not 0.0 < p < 1.0:
            raise InvalidArgumentError(f"attenuator transmissivity must lie in (0, 1), got {p}")
        return math.log((1.0 + p) / (1.0 - p))
    if kind == "amplifier":
        if not p > 1.0 or not math.isfinite(p):
            raise InvalidArgumentError(f"amplifier gain must be > 1, got {p}")
        return math.log((p + 1.0) / (p - 1.0))
    raise InvalidArgumentError(f"unknown channel kind {kind!r}")


# --- extremality ----------------------------------------------------------

def extremality_residual(k, alpha):
    """Distance of ``(K, alpha)`` from the extremality condition.

    With ``D = Delta - K Delta K^T`` invertible the channel is extreme iff
    ``-(alpha D^{-1})^2 = I/4``; the max-norm of the difference is returned.
    For symplectic ``K`` (``D = 0``) the residual is ``max|alpha|``.

    Raises:
        UnsupportedDegenerateError: ``D`` is singular but not zero.
    """
    k = np.asarray(k, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape != alpha.shape or k.shape[0] % 2:
        raise InvalidArgumentError(f"K and alpha must be matching square even matrices, got {k.shape}, {alpha.shape}")
    omega = symplectic_form(k.shape[0] // 2)
    dprime = omega - k @ omega @ k.T
    scale = max(1.0, np.linalg.norm(k, 2) ** 2)
    if np.max(np.abs(dprime)) <= 1e-12 * scale:
        return float(np.max(np.abs(alpha)))
    sv = np.linalg.svd(dprime, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise UnsupportedDegenerateError(
            "Delta - K Delta K^T is singular but nonzero; extremality test not supported"
        )
    x = alpha @ np.linalg.inv(dprime)
    eye = np.eye(k.shape[0])
    return float(np.max(np.abs(-(x @ x) - 0.25 * eye)))


def extremality_test(k, alpha, tol=EXTREMALITY_TOL):
    """True when the Gaussian channel ``(K, alpha)`` is extreme."""
    return extremality_residual(k, alpha) <= tol


# --- state bounds ---------------------------------------------------------

def lower_bound_formula(blocks: BlockDecomposition):
    """``(n/2) ln(2 b1c b1d + b1d b2c + b1c b2d)``."""
    arg = 2.0 * blocks.b1c * blocks.b1d + blocks.b1d * blocks.b2c + blocks.b1c * blocks.b2d
    return 0.5 * blocks.n * math.log(arg)


@dataclass(frozen=True)
class StateFactorization:
    """Williamson data of a 4n x 4n covariance arranged for the state bounds.

    ``s`` maps ``omega_A(E) (+) vacuum_B`` onto the state: its first 2n columns
    carry the n largest symplectic eigenvalues (photons ``E = nu - 1/2``) and
    its last 2n columns the n smallest ones, which should all be 1/2.
    """

    s: np.ndarray
    nu: np.ndarray
    photons: np.ndarray
    blocks: BlockDecomposition
    n_half: int
    williamson_residual: float

    @property
    def n(self):
        return self.blocks.n

    @property
    def half_deviation(self):
        """Largest distance from 1/2 among the n smallest symplectic eigenvalues."""
        return float(np.max(np.abs(self.nu[: self.n] - 0.5)))


def factorize_state(sigma_cd, half_tol=HALF_TOL):
    """Williamson factorization of ``sigma_cd`` with thermal modes first."""
    sigma_cd = np.asarray(sigma_cd, dtype=float)
    if sigma_cd.ndim != 2 or sigma_cd.shape[0] % 4:
        raise InvalidArgumentError(f"expected a 4n x 4n covariance, got shape {sigma_cd.shape}")
    res = williamson(sigma_cd)
    n = sigma_cd.shape[0] // 4
    perm = list(range(n, 2 * n)) + list(range(n))
    s_full = symplectic_inverse(mode_permutation_matrix(perm) @ res.s)
    blocks = block_decompose(s_full)
    n_half = int(np.sum(np.abs(res.nu - 0.5) <= half_tol))
    return StateFactorization(
        s=s_full,
        nu=res.nu,
        photons=np.maximum(res.nu[n:] - 0.5, 0.0),
        blocks=blocks,
        n_half=n_half,
        williamson_residual=res.residual,
    )


def state_lower_bound(sigma_cd, half_tol=HALF_TOL):
    """Lower bound on the squashed entanglement of a 2n+2n mode Gaussian state.

    The state must have at least n symplectic eigenvalues equal to 1/2; when
    fewer are found within ``half_tol`` a :class:`HalfEigenvalueWarning` is
    issued and the formula is evaluated anyway.
    """
    fac = factorize_state(sigma_cd, half_tol)
    if fac.n_half < fac.n:
        warnings.warn(
            f"only {fac.n_half} of the required {fac.n} symplectic eigenvalues equal 1/2",
            HalfEigenvalueWarning,
            stacklevel=2,
        )
    return lower_bound_formula(fac.blocks)


def _cr_covariance(b1, b2, photons, etas):
    # covariance of the C (or D) output together with the purifying reference R
    e = np.asarray(photons, dtype=float)
    eta = np.asarray(etas, dtype=float)
    a_e = np.diag(np.repeat(e + 0.5, 2))
    b_e = np.diag(np.repeat(np.sqrt(eta * e * (e + 1.0)), 2)) @ z_matrix(e.size)
    c_e = np.diag(np.repeat(eta * e + 0.5, 2))
    top = b1 @ a_e @ b1.T + 0.5 * b2 @ b2.T
    cross = b1 @ b_e
    return np.block([[top, cross], [cross.T, c_e]])


@dataclass(frozen=True)
class ExtensionFamily:
    """Extensions obtained by attenuating the reference half of the purification.

    The reference keeps ``eta_i`` of the i-th TMSV arm carrying ``photons[i]``.
    """

    eta: np.ndarray
    photons: np.ndarray

    def __post_init__(self):
        eta = np.atleast_1d(np.asarray(self.eta, dtype=float))
        e = np.atleast_1d(np.asarray(self.photons, dtype=float))
        if eta.shape != e.shape or eta.ndim != 1:
            raise InvalidArgumentError("eta and photons must be lists of equal length")
        if np.any(eta < 0) or np.any(eta > 1) or np.any(e < 0):
            raise InvalidArgumentError("need 0 <= eta_i <= 1 and E_i >= 0")
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "photons", e)

    def reference_covariance(self):
        """Covariance of ``omega_AR(eta)`` with modes ordered A_1..A_n, R_1..R_n."""
        e, eta = self.photons, self.eta
        c = np.diag(np.repeat(np.sqrt(eta * e * (e + 1.0)), 2)) @ z_matrix(e.size)
        return np.block(
            [[np.diag(np.repeat(e + 0.5, 2)), c], [c, np.diag(np.repeat(eta * e + 0.5, 2))]]
        )

    def upper_bound(self, blocks: BlockDecomposition):
        """Bound on ``I(C:D|R) / 2`` for this extension.

        ``S(CR)`` and ``S(DR)`` are bounded through ``g(nu - 1/2) <= ln nu + 1``,
        i.e. ``S(YR) <= 2n + ln det(sigma_YR) / 2``; the other two entropies are exact.
        """
        n = blocks.n
        if self.photons.size != n:
            raise InvalidArgumentError(f"need {n} photon numbers, got {self.photons.size}")
        total = 2.0 * n
        for b1, b2 in ((blocks.B1C, blocks.B2C), (blocks.B1D, blocks.B2D)):
            sign, logdet = np.linalg.slogdet(_cr_covariance(b1, b2, self.photons, self.eta))
            if sign <= 0:
                raise NumericalFailure("extension covariance is not positive definite")
            total += 0.25 * logdet
        # S(CDR) = S(AR) is the attenuator environment entropy g((1 - eta) E); S(R) = g(eta E)
        total -= 0.5 * (np.sum(g(self.eta * self.photons)) + np.sum(g((1.0 - self.eta) * self.photons)))
        return float(total)


def state_upper_bound(blocks: BlockDecomposition, photons):
    """Upper bound on the squashed entanglement from the balanced extension.

    For each ``Y`` in ``C, D`` with
    ``B12 = B1 A_E B1^T + B2 B2^T / 2`` and ``A_E = direct_sum((E_i + 1/2) I_2)``
    the contribution is
    ``1/4 ln[prod_i ((E_i + 1)/2)^2 det(B12) det(I - (E Z) B1^T B12^{-1} B1 Z)]``,
    and the tail ``2n - sum_i g(E_i / 2)`` is added once.

    Raises:
        NumericalFailure: ``B12`` is singular.
    """
    n = blocks.n
    e = np.atleast_1d(np.asarray(photons, dtype=float))
    if e.shape != (n,):
        raise InvalidArgumentError(f"need {n} photon numbers, got {e.size}")
    if np.any(e < 0):
        raise InvalidArgumentError("photon numbers must be nonnegative")
    a_e = np.diag(np.repeat(e + 0.5, 2))
    ez = np.diag(np.repeat(e, 2)) @ z_matrix(n)
    zn = z_matrix(n)
    log_pref = 2.0 * np.sum(np.log((e + 1.0) / 2.0))
    total = 2.0 * n - float(np.sum(g(e / 2.0)))
    for b1, b2 in ((blocks.B1C, blocks.B2C), (blocks.B1D, blocks.B2D)):
        b12 = b1 @ a_e @ b1.T + 0.5 * b2 @ b2.T
        sign, logdet = np.linalg.slogdet(b12)
        if sign <= 0 or np.linalg.cond(b12) > 1e14:
            raise NumericalFailure("B12 block is singular")
        inner = np.eye(2 * n) - ez @ b1.T @ np.linalg.solve(b12, b1 @ zn)
        sign2, logdet2 = np.linalg.slogdet(inner)
        if sign2 <= 0:
            raise NumericalFailure("Schur complement in the upper bound is not positive")
        total += 0.25 * (log_pref + logdet + logdet2)
    return total


# --- limit extrapolation ----------------------------------------------------

@dataclass
class ScheduleEntry:
    param: float
    value: float
    ok: bool = True
    note: str = ""


@dataclass
class BoundsReport:
    """Bound values along a schedule and their extrapolated limit.

    ``residual`` is the size of the final extrapolation step, i.e. the
    distance between the limit and the last accepted schedule value, and
    ``converged`` is ``residual <= conv_tol``. Points that failed
    numerically, or whose increments grow once the sequence has started to
    settle, are kept in ``entries`` with ``ok=False`` and not used.
    """

    kind: str
    entries: list = field(default_factory=list)
    limit: float = float("nan")
    converged: bool = False
    residual: float = float("nan")
    conv_tol: float = DEFAULT_CONV_TOL
    extras: dict = field(default_factory=dict)

    @property
    def schedule(self):
        return [(e.param, e.value) for e in self.entries if e.ok]

    @property
    def flagged(self):
        return [e for e in self.entries if not e.ok]

    def to_dict(self):
        return {
            "kind": self.kind,
            "schedule": [[p, v] for p, v in self.schedule],
            "flagged": [{"param": e.param, "value": _finite_or_none(e.value), "note": e.note} for e in self.flagged],
            "limit": _finite_or_none(self.limit),
            "converged": self.converged,
            "residual": _finite_or_none(self.residual),
            "conv_tol": self.conv_tol,
            **self.extras,
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def csv_rows(self):
        """Rows ``(kind, param, value, limit, converged, residual)``."""
        return [
            (self.kind, p, v, self.limit, self.converged, self.residual) for p, v in self.schedule
        ]


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def _extrapolate(report: BoundsReport):
    # drop the tail once increments start growing again (round-off takes over)
    pts = [e for e in report.entries if e.ok]
    kept = pts[:2]
    settling = False
    for e in pts[2:]:
        d_prev = kept[-1].value - kept[-2].value
        d = e.value - kept[-1].value
        if abs(d) < abs(d_prev):
            settling = True
        elif settling and abs(d) > abs(d_prev) + 1e-13:
            idx = report.entries.index(e)
            for late in report.entries[idx:]:
                if late.ok:
                    late.ok = False
                    late.note = "increments grow: round-off dominated"
            break
        kept.append(e)
    if not kept:
        return report
    if len(kept) == 1:
        report.limit = kept[0].value
        return report
    (p1, v1), (p2, v2) = (kept[-2].param, kept[-2].value), (kept[-1].param, kept[-1].value)
    # first-order Richardson step in 1/p: v(p) = L + a/p
    report.limit = (p2 * v2 - p1 * v1) / (p2 - p1)
    report.residual = abs(report.limit - v2)
    report.converged = report.residual <= report.conv_tol
    return report


def _check_schedule(schedule, name):
    sched = [float(x) for x in schedule]
    if not sched or any(not (x > 0 and math.isfinite(x)) for x in sched):
        raise InvalidArgumentError(f"{name} schedule must hold positive finite values")
    if any(b <= a for a, b in zip(sched, sched[1:])):
        raise InvalidArgumentError(f"{name} schedule must be strictly increasing")
    return sched


# --- channel lower bound ---------------------------------------------------

def sigma_cd(ch: GaussianChannel, n_photons):
    """Output covariance of ``(id (x) ch)`` on n TMSV pairs with ``n_photons`` each.

    Modes are ordered as the n reference modes followed by the n channel outputs.
    """
    n = ch.n
    sigma_ab = multimode_tmsv_cov(np.full(n, float(n_photons)))
    lift = direct_sum(np.eye(2 * n), ch.k)
    out = lift @ sigma_ab @ lift.T
    out[2 * n :, 2 * n :] += ch.alpha
    return out


def lower_bound_point(ch: GaussianChannel, n_photons, half_tol=HALF_TOL):
    """C_LB(N) and the factorization it came from."""
    fac = factorize_state(sigma_cd(ch, n_photons), half_tol)
    return lower_bound_formula(fac.blocks), fac


def channel_lower_bound(ch: GaussianChannel, schedule=DEFAULT_N_SCHEDULE, conv_tol=DEFAULT_CONV_TOL,
                        half_tol=HALF_TOL):
    """Lower bound on the squashed entanglement of an extreme Gaussian channel.

    Evaluates C_LB(N) on the TMSV photon-number ``schedule`` and extrapolates
    N -> infinity. Points where the Williamson step fails, or where fewer than
    n symplectic eigenvalues sit within ``half_tol`` of 1/2 (a symptom of
    round-off at large N), are flagged and skipped.
    """
    sched = _check_schedule(schedule, "N")
    try:
        extreme = extremality_test(ch.k, ch.alpha)
    except UnsupportedDegenerateError:
        extreme = False
    if not extreme:
        warnings.warn(
            "channel is not extreme; the half-eigenvalue structure is not guaranteed",
            HalfEigenvalueWarning,
            stacklevel=2,
        )
    report = BoundsReport("lower", conv_tol=conv_tol)
    for n_ph in sched:
        try:
            value, fac = lower_bound_point(ch, n_ph, half_tol)
        except (NumericalFailure, InvalidArgumentError, np.linalg.LinAlgError) as exc:
            report.entries.append(ScheduleEntry(n_ph, float("nan"), False, str(exc)))
            continue
        if fac.n_half < ch.n:
            report.entries.append(ScheduleEntry(
                n_ph, value, False,
                f"{fac.n_half} of {ch.n} symplectic eigenvalues at 1/2 (max deviation {fac.half_deviation:.2e})",
            ))
            continue
        report.entries.append(ScheduleEntry(n_ph, value))
    return _extrapolate(report)


# --- channel upper bound ---------------------------------------------------

def half_beam_splitter(n):
    """``(1/sqrt 2) [[I, I], [-I, I]]`` acting on two n-mode systems."""
    eye = np.eye(2 * n)
    return np.block([[eye, eye], [-eye, eye]]) / math.sqrt(2.0)


def squashed_covariance(ch: GaussianChannel, t, squash_env: Optional[GaussianState] = None):
    """Covariance of the channel output B, squashed environment E'' and F'.

    The input has covariance ``t I``; the environment output E' is mixed with
    the auxiliary state ``squash_env`` (vacuum by default) on a 50:50 beam
    splitter. Modes are ordered B, E'', F'.
    """
    if ch.dilation is None:
        raise InvalidArgumentError("the upper bound needs a Stinespring dilation of the channel")
    n = ch.n
    s, env = ch.dilation.s, ch.dilation.env
    n_e = env.n
    if squash_env is None:
        squash_env = vacuum_state(n_e)
    if squash_env.n != n_e:
        raise InvalidArgumentError(f"squashing state must have {n_e} modes, got {squash_env.n}")
    inp = direct_sum(float(t) * np.eye(2 * n), env.sigma, squash_env.sigma)
    u = direct_sum(np.eye(2 * n), half_beam_splitter(n_e)) @ direct_sum(s, np.eye(2 * n_e))
    return u @ inp @ u.T


def _sub_entropy(sigma, modes, clip):
    idx = _quad_indices(modes)
    return entropy_cov(sigma[np.ix_(idx, idx)], clip)


def upper_bound_point(ch: GaussianChannel, t, squash_env=None):
    """C_UB(t) = [S(BE'') - S(E'') + S(BF') - S(F')] / 2."""
    sig = squashed_covariance(ch, t, squash_env)
    n = ch.n
    n_e = ch.dilation.env.n
    b = list(range(n))
    e2 = list(range(n, n + n_e))
    f2 = list(range(n + n_e, n + 2 * n_e))
    # eigenvalues near 1/2 are only resolved to about eps * |sigma|
    clip = max(1e-9, 1e-13 * float(np.max(np.abs(sig))))
    s_be = _sub_entropy(sig, b + e2, clip)
    s_e = _sub_entropy(sig, e2, clip)
    s_bf = _sub_entropy(sig, b + f2, clip)
    s_f = _sub_entropy(sig, f2, clip)
    return 0.5 * (s_be - s_e + s_bf - s_f)


def channel_upper_bound(ch: GaussianChannel, squash_env=None, schedule=DEFAULT_T_SCHEDULE,
                        conv_tol=DEFAULT_CONV_TOL):
    """Upper bound on the squashed entanglement of a Gaussian channel with a dilation.

    Evaluates C_UB(t) on ``schedule`` and extrapolates t -> infinity.
    """
    if ch.dilation is None:
        raise InvalidArgumentError("the upper bound needs a Stinespring dilation of the channel")
    sched = _check_schedule(schedule, "t")
    report = BoundsReport("upper", conv_tol=conv_tol)
    for t in sched:
        try:
            value = upper_bound_point(ch, t, squash_env)
        except (NumericalFailure, InvalidArgumentError, np.linalg.LinAlgError) as exc:
            report.entries.append(ScheduleEntry(t, float("nan"), False, str(exc)))
            continue
        if not math.isfinite(value):
            report.entries.append(ScheduleEntry(t, value, False, "non-finite value"))
            continue
        report.entries.append(ScheduleEntry(t, value))
    return _extrapolate(report)


def _squash_tmsv(n_s):
    return tmsv(n_s, modes=("F1", "F2"))


def optimize_squash_squeezing(ch: GaussianChannel, ns_max=None, schedule=DEFAULT_T_SCHEDULE,
                              conv_tol=DEFAULT_CONV_TOL, xatol=1e-7):
    """Minimize the upper bound over TMSV squashing states with ``n_s`` photons per mode.

    Only for channels with a two-mode environment. A coarse grid
    ``0, 1/16, 1/8, ..., ns_max`` locates the minimum; a bounded scalar search
    refines it inside the bracketing grid cell. If the refined value is not
    below the grid minimum, a dense grid over the bracket is scanned instead.

    Returns:
        (best n_s, BoundsReport at that n_s)
    """
    if ch.dilation is None:
        raise InvalidArgumentError("the upper bound needs a Stinespring dilation of the channel")
    if ch.dilation.env.n != 2:
        raise InvalidArgumentError("squashing optimization needs a two-mode environment")

    cache = {}

    def report_at(ns):
        ns = float(ns)
        if ns not in cache:
            cache[ns] = channel_upper_bound(ch, _squash_tmsv(ns), schedule, conv_tol)
        return cache[ns]

    def objective(ns):
        lim = report_at(max(ns, 0.0)).limit
        return lim if math.isfinite(lim) else float("inf")

    auto_max = ns_max is None
    grid_max = 1024.0 if auto_max else float(ns_max)
    if grid_max < 0:
        raise InvalidArgumentError("ns_max must be nonnegative")
    grid = [0.0]
    x = min(1.0 / 16.0, grid_max)
    while x < grid_max and x > 0:
        grid.append(x)
        x *= 2.0
    if grid_max > 0:
        grid.append(grid_max)
    values = []
    for x in grid:
        values.append(objective(x))
        # stop growing the grid once the bound has increased twice in a row
        if auto_max and len(values) >= 3 and values[-1] > values[-2] > values[-3]:
            break
    grid = grid[: len(values)]
    i = int(np.argmin(values))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    best_x, best_v = grid[i], values[i]
    method = "grid"
    if hi > lo:
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded",
                              options={"xatol": xatol})
        if res.success and res.fun <= best_v + 1e-12 * max(1.0, abs(best_v)):
            if res.fun < best_v:
                best_x, best_v = float(res.x), float(res.fun)
            method = "bounded-search"
        else:
            dense = np.linspace(lo, hi, 201)
            dense_v = [objective(d) for d in dense]
            j = int(np.argmin(dense_v))
            if dense_v[j] < best_v:
                best_x, best_v = float(dense[j]), float(dense_v[j])
            method = "dense-grid"
    report = report_at(best_x)
    report.extras = {"n_s": best_x, "n_s_method": method}
    return best_x, report
