"""Gaussian states and channels in the covariance-matrix picture.

Conventions (used throughout the package): hbar = 1, [Q, P] = i, the vacuum
has covariance I/2, quadratures are interleaved per mode and
``Z_2 = diag(1, -1)``.
"""

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .symplectic import (
    direct_sum,
    is_symplectic,
    mode_permutation_matrix,
    symplectic_eigenvalues,
    symplectic_form,
    z_matrix,
)

PURE_TOL = 1e-8
VALIDITY_TOL = 1e-10


def _quad_indices(modes):
    modes = np.asarray(modes, dtype=int)
    return np.stack([2 * modes, 2 * modes + 1], axis=1).ravel()


def uncertainty_margin(sigma):
    """Smallest eigenvalue of the Hermitian matrix ``sigma + (i/2) Delta``."""
    sigma = np.asarray(sigma, dtype=float)
    omega = symplectic_form(sigma.shape[0] // 2)
    return float(np.linalg.eigvalsh(sigma + 0.5j * omega)[0])


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state given by its first and second moments.

    Attributes:
        modes: one label per mode.
        r: mean vector of length 2n.
        sigma: 2n x 2n covariance matrix.
    """

    modes: tuple
    r: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        modes = tuple(str(m) for m in self.modes)
        if len(set(modes)) != len(modes):
            raise InvalidArgumentError(f"duplicate mode labels: {modes}")
        n = len(modes)
        if n == 0:
            raise InvalidArgumentError("a state needs at least one mode")
        sigma = np.array(self.sigma, dtype=float)
        r = np.array(self.r, dtype=float).reshape(-1)
        if sigma.shape != (2 * n, 2 * n):
            raise InvalidArgumentError(f"covariance shape {sigma.shape} does not match {n} modes")
        if r.shape != (2 * n,):
            raise InvalidArgumentError(f"mean vector length {r.size} does not match {n} modes")
        if not (np.all(np.isfinite(sigma)) and np.all(np.isfinite(r))):
            raise InvalidArgumentError("moments must be finite")
        scale = max(1.0, np.linalg.norm(sigma, 2))
        if np.max(np.abs(sigma - sigma.T)) > 1e-10 * scale:
            raise InvalidArgumentError("covariance matrix is not symmetric")
        sigma = 0.5 * (sigma + sigma.T)
        margin = uncertainty_margin(sigma)
        if margin < -VALIDITY_TOL * scale:
            raise InvalidArgumentError(
                f"covariance violates the uncertainty principle (min eigenvalue {margin:.3e})"
            )
        sigma.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "r", r)

    @property
    def n(self):
        return len(self.modes)

    def indices(self, group):
        """Mode indices for a group given as labels and/or integer positions."""
        if isinstance(group, (str, int, np.integer)):
            group = [group]
        out = []
        for g in group:
            if isinstance(g, (int, np.integer)):
                if not 0 <= g < self.n:
                    raise InvalidArgumentError(f"mode index {g} out of range")
                out.append(int(g))
            else:
                try:
                    out.append(self.modes.index(str(g)))
                except ValueError:
                    raise InvalidArgumentError(f"unknown mode label {g!r}") from None
        if len(set(out)) != len(out):
            raise InvalidArgumentError(f"repeated modes in group {list(group)}")
        return out

    def symplectic_eigenvalues(self):
        return symplectic_eigenvalues(self.sigma)

    def is_pure(self, tol=PURE_TOL):
        return bool(np.max(np.abs(self.symplectic_eigenvalues() - 0.5)) <= tol)


@dataclass(frozen=True)
class ModePartition:
    """Named disjoint groups of mode indices."""

    groups: dict = field(default_factory=dict)
    n_modes: Optional[int] = None

    def __post_init__(self):
        seen = set()
        for name, idx in self.groups.items():
            for i in idx:
                if i in seen:
                    raise InvalidArgumentError(f"mode {i} appears in more than one group")
                if self.n_modes is not None and not 0 <= i < self.n_modes:
                    raise InvalidArgumentError(f"mode {i} of group {name!r} out of range")
                seen.add(i)

    def __getitem__(self, name):
        return list(self.groups[name])


def _labels(prefix, n):
    return tuple(f"{prefix}{i + 1}" for i in range(n))


def _photons(photons):
    e = np.atleast_1d(np.asarray(photons, dtype=float))
    if e.ndim != 1 or e.size == 0:
        raise InvalidArgumentError("photon numbers must be a nonempty list")
    if np.any(e < 0) or not np.all(np.isfinite(e)):
        raise InvalidArgumentError(f"photon numbers must be finite and nonnegative, got {e}")
    return e


def thermal_state(photons, modes=None):
    """Product of thermal states, covariance ``direct_sum((E_i + 1/2) I_2)``."""
    e = _photons(photons)
    modes = modes if modes is not None else _labels("m", e.size)
    return GaussianState(modes, np.zeros(2 * e.size), np.diag(np.repeat(e + 0.5, 2)))


def vacuum_state(n, modes=None):
    return thermal_state(np.zeros(int(n)), modes)


def tmsv_cov(n_photons):
    """Covariance of the two-mode squeezed vacuum with ``N`` photons per mode."""
    (nph,) = _photons(n_photons)
    c = np.sqrt(nph * (nph + 1.0))
    d = (nph + 0.5) * np.eye(2)
    z = c * z_matrix(1)
    return np.block([[d, z], [z, d]])


def tmsv(n_photons, modes=("A", "R")):
    return GaussianState(modes, np.zeros(4), tmsv_cov(n_photons))


def multimode_tmsv_cov(photons):
    """Covariance of ``n`` TMSV pairs ordered as A_1..A_n, R_1..R_n."""
    e = _photons(photons)
    c = np.sqrt(e * (e + 1.0))
    d = np.diag(np.repeat(e + 0.5, 2))
    z = np.diag(np.repeat(c, 2)) @ z_matrix(e.size)
    return np.block([[d, z], [z, d]])


def multimode_tmsv(photons, modes=None):
    e = _photons(photons)
    modes = modes if modes is not None else _labels("A", e.size) + _labels("R", e.size)
    return GaussianState(modes, np.zeros(4 * e.size), multimode_tmsv_cov(e))


def beam_splitter_symplectic(etas):
    """Symplectic matrix of per-mode beam splitters between two n-mode systems.

    Mode i of the first system mixes with mode i of the second with
    transmissivity ``eta_i``; the first system is ordered first.
    """
    eta = np.atleast_1d(np.asarray(etas, dtype=float))
    if eta.ndim != 1 or eta.size == 0 or np.any(eta < 0) or np.any(eta > 1):
        raise InvalidArgumentError(f"transmissivities must lie in [0, 1], got {eta}")
    t = np.diag(np.repeat(np.sqrt(eta), 2))
    r = np.diag(np.repeat(np.sqrt(1.0 - eta), 2))
    return np.block([[t, r], [-r, t]])


def squeezer_symplectic(kappas):
    """Symplectic matrix of per-mode two-mode squeezers (gain ``kappa_i >= 1``)."""
    kap = np.atleast_1d(np.asarray(kappas, dtype=float))
    if kap.ndim != 1 or kap.size == 0 or np.any(kap < 1) or not np.all(np.isfinite(kap)):
        raise InvalidArgumentError(f"squeezing gains must be >= 1, got {kap}")
    d = np.diag(np.repeat(np.sqrt(kap), 2))
    z = np.diag(np.repeat(np.sqrt(kap - 1.0), 2)) @ z_matrix(kap.size)
    return np.block([[d, z], [z, d]])


def is_valid_channel(k, alpha, tol=VALIDITY_TOL):
    """Complete-positivity test ``alpha +- (i/2)(Delta - K Delta K^T) >= 0``."""
    k = np.asarray(k, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape != alpha.shape or k.shape[0] % 2:
        raise InvalidArgumentError(f"K and alpha must be matching square even matrices, got {k.shape}, {alpha.shape}")
    if np.max(np.abs(alpha - alpha.T), initial=0.0) > tol * max(1.0, np.max(np.abs(alpha))):
        return False
    omega = symplectic_form(k.shape[0] // 2)
    dprime = omega - k @ omega @ k.T
    scale = max(1.0, np.linalg.norm(alpha, 2))
    herm = 0.5 * (alpha + alpha.T) + 0.5j * dprime
    # the minus sign gives the complex conjugate, which has the same spectrum
    return bool(np.linalg.eigvalsh(herm)[0] >= -tol * scale)


@dataclass(frozen=True)
class Dilation:
    """Stinespring dilation: symplectic ``s`` over system + environment and the environment state."""

    s: np.ndarray
    env: GaussianState


@dataclass(frozen=True)
class GaussianChannel:
    """Gaussian channel acting as ``sigma -> K sigma K^T + alpha``, ``r -> K r``."""

    k: np.ndarray
    alpha: np.ndarray
    dilation: Optional[Dilation] = None

    def __post_init__(self):
        k = np.array(self.k, dtype=float)
        alpha = np.array(self.alpha, dtype=float)
        if not is_valid_channel(k, alpha):
            raise InvalidArgumentError("(K, alpha) does not define a valid Gaussian channel")
        alpha = 0.5 * (alpha + alpha.T)
        k.setflags(write=False)
        alpha.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self):
        return self.k.shape[0] // 2


def channel_from_stinespring(s, env):
    """Channel obtained by coupling the system to ``env`` through ``s`` and tracing it out.

    ``K`` is the system-system block of ``s`` and
    ``alpha = S_SE sigma_E S_SE^T``.
    """
    s = np.asarray(s, dtype=float)
    if not isinstance(env, GaussianState):
        raise InvalidArgumentError("environment must be a GaussianState")
    dim = s.shape[0] - 2 * env.n
    if s.ndim != 2 or s.shape[0] != s.shape[1] or dim <= 0:
        raise InvalidArgumentError(f"dilation shape {s.shape} incompatible with {env.n} environment modes")
    if not is_symplectic(s):
        raise InvalidArgumentError("dilation matrix is not symplectic")
    k = s[:dim, :dim]
    s_se = s[:dim, dim:]
    alpha = s_se @ env.sigma @ s_se.T
    return GaussianChannel(k, alpha, Dilation(s.copy(), env))


def attenuator(eta):
    """Pure-loss channel(s) with transmissivities ``eta`` and vacuum environment."""
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    return channel_from_stinespring(
        beam_splitter_symplectic(eta), vacuum_state(eta.size, _labels("E", eta.size))
    )


def amplifier(kappa):
    """Quantum-limited amplifier(s) with gains ``kappa`` and vacuum environment."""
    kap = np.atleast_1d(np.asarray(kappa, dtype=float))
    return channel_from_stinespring(
        squeezer_symplectic(kap), vacuum_state(kap.size, _labels("E", kap.size))
    )


def two_mode_example(eta1, eta2, env_photons):
    """Two attenuators whose environments share a TMSV with ``env_photons`` per mode."""
    env = tmsv(env_photons, modes=("E1", "E2"))
    return channel_from_stinespring(beam_splitter_symplectic([eta1, eta2]), env)


def _embed(st, target, k):
    idx = _quad_indices(st.indices(target))
    if k.shape[0] != idx.size:
        raise InvalidArgumentError(
            f"operation acts on {k.shape[0] // 2} modes but target has {idx.size // 2}"
        )
    full = np.eye(2 * st.n)
    full[np.ix_(idx, idx)] = k
    return full, idx


def apply_symplectic(s, st, target=None):
    """Apply the Gaussian unitary ``s`` to the modes in ``target`` (all modes by default)."""
    s = np.asarray(s, dtype=float)
    target = range(st.n) if target is None else target
    full, _ = _embed(st, target, s)
    return GaussianState(st.modes, full @ st.r, full @ st.sigma @ full.T)


def apply_channel(ch, st, target=None):
    """Apply ``ch`` to the modes in ``target``; cross-covariances pick up ``K`` on the target side."""
    target = range(st.n) if target is None else target
    full, idx = _embed(st, target, ch.k)
    sigma = full @ st.sigma @ full.T
    sigma[np.ix_(idx, idx)] += ch.alpha
    return GaussianState(st.modes, full @ st.r, sigma)


def add_classical_noise(st, alpha):
    """Additive Gaussian noise: ``sigma -> sigma + alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != st.sigma.shape:
        raise InvalidArgumentError(f"noise matrix shape {alpha.shape} does not match {st.sigma.shape}")
    if np.max(np.abs(alpha - alpha.T)) > 1e-12 * max(1.0, np.max(np.abs(alpha))):
        raise InvalidArgumentError("noise matrix must be symmetric")
    if np.linalg.eigvalsh(alpha)[0] < -1e-12 * max(1.0, np.linalg.norm(alpha, 2)):
        raise InvalidArgumentError("noise matrix must be positive semidefinite")
    return GaussianState(st.modes, st.r, st.sigma + alpha)


def partial_trace(st, keep):
    """Reduced state on ``keep``, in the given order."""
    modes = st.indices(keep)
    if not modes:
        raise InvalidArgumentError("nothing to keep")
    idx = _quad_indices(modes)
    return GaussianState(
        tuple(st.modes[m] for m in modes), st.r[idx], st.sigma[np.ix_(idx, idx)]
    )


def tensor(*states):
    """Tensor product; covariances combine as a direct sum."""
    modes = sum((s.modes for s in states), ())
    if len(set(modes)) != len(modes):
        raise InvalidArgumentError(f"mode labels collide: {modes}")
    return GaussianState(
        modes, np.concatenate([s.r for s in states]), direct_sum(*[s.sigma for s in states])
    )


def reorder_modes(st, permutation: Sequence):
    """New state whose k-th mode is mode ``permutation[k]`` of ``st`` (labels or indices)."""
    perm = st.indices(permutation)
    if len(perm) != st.n:
        raise InvalidArgumentError("permutation must list every mode exactly once")
    p = mode_permutation_matrix(perm)
    return GaussianState(tuple(st.modes[i] for i in perm), p @ st.r, p @ st.sigma @ p.T)


def relabel(st, modes):
    return GaussianState(modes, st.r, st.sigma)


def mean_photons(st):
    """Average photon number ``tr(sigma - I/2) / 2`` of the centred state.

    The displacement contribution ``|r|^2 / 2`` is not included.
    """
    return float(0.5 * np.trace(st.sigma - 0.5 * np.eye(2 * st.n)))


# --- JSON ---------------------------------------------------------------

def _matrix(value, name, dim=None):
    m = np.asarray(value, dtype=float)
    if m.ndim == 1 and dim is None:
        side = int(round(np.sqrt(m.size)))
        if side * side != m.size:
            raise InvalidArgumentError(f"{name}: flat list of length {m.size} is not square")
        m = m.reshape(side, side)
    elif m.ndim == 1:
        m = m.reshape(dim, dim)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"{name} must be a square matrix")
    return m


def state_to_dict(st):
    return {"modes": list(st.modes), "mean": st.r.tolist(), "cov": st.sigma.tolist()}


def state_from_dict(d):
    try:
        cov = _matrix(d["cov"], "cov")
        modes = d.get("modes") or _labels("m", cov.shape[0] // 2)
        mean = d.get("mean", np.zeros(cov.shape[0]))
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed state description: {exc}") from None
    return GaussianState(modes, mean, cov)


def channel_to_dict(ch):
    d = {"K": ch.k.tolist(), "alpha": ch.alpha.tolist()}
    if ch.dilation is not None:
        d["dilation"] = {"S": ch.dilation.s.tolist(), "env": state_to_dict(ch.dilation.env)}
    return d


def channel_from_dict(d):
    """Build a channel from its JSON description.

    Accepted forms: explicit ``{"K", "alpha"}``, a dilation
    ``{"dilation": {"S", "env"}}``, or a named family
    ``{"kind": "attenuator" | "amplifier" | "two_mode_example", ...}``.
    """
    if not isinstance(d, dict):
        raise InvalidArgumentError("channel description must be a JSON object")
    try:
        kind = d.get("kind")
        if kind == "attenuator":
            return attenuator(d["eta"])
        if kind == "amplifier":
            return amplifier(d["kappa"])
        if kind == "two_mode_example":
            return two_mode_example(d["eta1"], d["eta2"], d.get("kappa_env", 0.0))
        if kind is not None:
            raise InvalidArgumentError(f"unknown channel kind {kind!r}")
        if "dilation" in d:
            dil = d["dilation"]
            ch = channel_from_stinespring(_matrix(dil["S"], "S"), state_from_dict(dil["env"]))
            if "K" in d and not np.allclose(ch.k, _matrix(d["K"], "K"), atol=1e-10):
                raise InvalidArgumentError("K does not match the dilation")
            if "alpha" in d and not np.allclose(ch.alpha, _matrix(d["alpha"], "alpha"), atol=1e-10):
                raise InvalidArgumentError("alpha does not match the dilation")
            return ch
        return GaussianChannel(_matrix(d["K"], "K"), _matrix(d["alpha"], "alpha"))
    except (KeyError, TypeError) as exc:
        raise InvalidArgumentError(f"malformed channel description: missing or bad field {exc}") from None


def load_channel(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
    return channel_from_dict(data)


def load_state(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: invalid JSON ({exc})") from None
    return state_from_dict(data)
