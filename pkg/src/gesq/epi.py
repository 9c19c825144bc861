"""Numerical checks of the conditional entropy power inequality for Gaussian inputs.

For ``Y = sum_i B_i X_i`` with ``sum_i B_i Delta B_i^T = Delta`` and inputs
that are conditionally independent given a memory ``M``::

    exp(S(Y|M) / n) >= sum_i b_i exp(S(X_i|M) / n),   b_i = |det B_i|^{1/n}

and, for every probability vector ``lambda``::

    S(Y|M)/n >= sum_i lambda_i S(X_i|M)/n + sum_i lambda_i ln(b_i / lambda_i).

Instances are Gaussian; conditional independence is built in by taking the
joint input state to be the product of the ``rho_{X_i M_i}``.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import softmax
from scipy.stats import unitary_group

from .entropy import entropy_cov
from .errors import InvalidArgumentError
from .gaussian import (
    GaussianState,
    beam_splitter_symplectic,
    squeezer_symplectic,
    thermal_state,
)
from .symplectic import direct_sum, mode_permutation_matrix, symplectic_form

BLOCK_TOL = 1e-10
SLACK = 1e-9
MEMORY_KINDS = ("quantum", "thermal", "mixed")


@dataclass(frozen=True)
class EpiInstance:
    """Mixing blocks and conditionally independent inputs.

    ``inputs[i]`` is the state of ``X_i M_i`` with the n modes of ``X_i``
    first; ``n_memory[i]`` is the number of memory modes (0 for none).
    """

    k: int
    n: int
    blocks: Tuple[np.ndarray, ...]
    inputs: Tuple[GaussianState, ...]
    n_memory: Tuple[int, ...]
    seed: int = None

    @property
    def b(self):
        return np.array([abs(np.linalg.det(blk)) ** (1.0 / self.n) for blk in self.blocks])

    def block_residual(self):
        omega = symplectic_form(self.n)
        acc = sum(blk @ omega @ blk.T for blk in self.blocks)
        return float(np.max(np.abs(acc - omega)))


@dataclass(frozen=True)
class EpiVerdict:
    lhs: float
    rhs: float
    margin: float
    holds: bool


# --- random generators ------------------------------------------------------

def _xxpp_to_interleaved(m):
    perm = np.empty(2 * m, dtype=int)
    perm[0::2] = np.arange(m)
    perm[1::2] = np.arange(m, 2 * m)
    p = np.eye(2 * m)[perm]
    return p


def random_passive(m, rng):
    """Random orthogonal symplectic matrix (a passive linear-optics network)."""
    u = unitary_group.rvs(m, random_state=rng) if m > 1 else np.array([[np.exp(1j * rng.uniform(0, 2 * np.pi))]])
    x, y = u.real, u.imag
    o = np.block([[x, -y], [y, x]])
    p = _xxpp_to_interleaved(m)
    return p @ o @ p.T


def _pair_embed(m, i, j, s4):
    perm = [i, j] + [q for q in range(m) if q not in (i, j)]
    p = mode_permutation_matrix(perm)
    return p.T @ direct_sum(s4, np.eye(2 * m - 4)) @ p if m > 2 else s4


def random_symplectic(m, rng, layers=3, max_squeeze=0.6):
    """Product of passive networks, single-mode squeezers, beam splitters and two-mode squeezers."""
    s = random_passive(m, rng)
    for _ in range(layers):
        r = rng.uniform(-max_squeeze, max_squeeze, size=m)
        s = np.diag(np.exp(np.ravel(np.column_stack([r, -r])))) @ s
        if m >= 2:
            i, j = rng.choice(m, size=2, replace=False)
            if rng.random() < 0.5:
                s4 = beam_splitter_symplectic([rng.uniform()])
            else:
                s4 = squeezer_symplectic([rng.uniform(1.0, 2.0)])
            s = _pair_embed(m, i, j, s4) @ s
        s = random_passive(m, rng) @ s
    return s


def _blocks_from(s, k, n):
    top = s[: 2 * n]
    return tuple(top[:, 2 * n * i: 2 * n * (i + 1)].copy() for i in range(k))


def random_blocks(k, n, rng):
    """K blocks from the top rows of a random symplectic on K n modes."""
    omega = symplectic_form(n)
    for _ in range(100):
        style = rng.integers(3) if k == 2 else 2
        if style == 0:
            s = beam_splitter_symplectic(rng.uniform(size=n))
        elif style == 1:
            s = squeezer_symplectic(rng.uniform(1.0, 3.0, size=n))
        else:
            s = random_symplectic(k * n, rng)
        blocks = _blocks_from(s, k, n)
        acc = sum(b @ omega @ b.T for b in blocks)
        if np.max(np.abs(acc - omega)) <= BLOCK_TOL:
            return blocks
    raise RuntimeError("could not generate blocks within tolerance")  # pragma: no cover


def _random_input(n, kind, rng, label):
    xs = [f"X{label}_{j + 1}" for j in range(n)]
    local = random_symplectic(n, rng, layers=1, max_squeeze=0.4)
    if kind == "thermal":
        th = thermal_state(rng.uniform(0.0, 2.0, size=n), xs)
        return GaussianState(xs, np.zeros(2 * n), local @ th.sigma @ local.T), 0
    # attenuated TMSV: X keeps the untouched arm, M the attenuated one
    e = rng.uniform(0.0, 2.0, size=n)
    eta = rng.uniform(0.0, 1.0, size=n)
    c = np.diag(np.repeat(np.sqrt(eta * e * (e + 1.0)), 2)) @ np.diag(np.tile([1.0, -1.0], n))
    sigma = np.block([[np.diag(np.repeat(e + 0.5, 2)), c], [c, np.diag(np.repeat(eta * e + 0.5, 2))]])
    lm = random_symplectic(n, rng, layers=1, max_squeeze=0.4)
    u = direct_sum(local, lm)
    sigma = u @ sigma @ u.T
    # occasional extra classical noise on X keeps the state mixed
    if rng.random() < 0.3:
        a = rng.normal(size=(2 * n, 2 * n)) * 0.3
        sigma[: 2 * n, : 2 * n] += a @ a.T
    ms = [f"M{label}_{j + 1}" for j in range(n)]
    return GaussianState(xs + ms, np.zeros(4 * n), sigma), n


def random_instance(k, n, seed, memory_kind="mixed"):
    """Seeded random instance with ``k`` inputs of ``n`` modes each.

    ``memory_kind`` is ``"quantum"`` (attenuated TMSV halves, the other arm
    held as memory), ``"thermal"`` (locally squeezed thermal inputs with no
    memory) or ``"mixed"`` (chosen per input).
    """
    if k < 2 or n < 1:
        raise InvalidArgumentError(f"need k >= 2 and n >= 1, got k={k}, n={n}")
    if memory_kind not in MEMORY_KINDS:
        raise InvalidArgumentError(f"memory_kind must be one of {MEMORY_KINDS}")
    rng = np.random.default_rng(seed)
    blocks = random_blocks(k, n, rng)
    inputs, mem = [], []
    for i in range(k):
        kind = memory_kind
        if kind == "mixed":
            kind = "quantum" if rng.random() < 0.5 else "thermal"
        st, m = _random_input(n, kind, rng, i + 1)
        inputs.append(st)
        mem.append(m)
    return EpiInstance(k, n, blocks, tuple(inputs), tuple(mem), seed)


def make_instance(blocks, inputs, n_memory=None):
    """Instance from explicit blocks and input states (memory modes after the n X modes)."""
    blocks = tuple(np.asarray(b, dtype=float) for b in blocks)
    if len(blocks) < 2:
        raise InvalidArgumentError("need at least two blocks")
    n = blocks[0].shape[0] // 2
    if any(b.shape != (2 * n, 2 * n) for b in blocks):
        raise InvalidArgumentError("blocks must all be 2n x 2n")
    if n_memory is None:
        n_memory = tuple(st.n - n for st in inputs)
    if len(inputs) != len(blocks) or any(st.n != n + m for st, m in zip(inputs, n_memory)):
        raise InvalidArgumentError("inputs do not match the blocks")
    inst = EpiInstance(len(blocks), n, blocks, tuple(inputs), tuple(int(m) for m in n_memory))
    if inst.block_residual() > BLOCK_TOL:
        raise InvalidArgumentError("blocks violate sum_i B_i Delta B_i^T = Delta")
    return inst


def drop_memory(inst: EpiInstance):
    """Same instance with the memory discarded."""
    d = 2 * inst.n
    inputs = tuple(
        GaussianState(st.modes[: inst.n], st.r[:d], st.sigma[:d, :d]) for st in inst.inputs
    )
    return EpiInstance(inst.k, inst.n, inst.blocks, inputs, (0,) * inst.k, inst.seed)


# --- evaluation ---------------------------------------------------------------

def conditional_entropies(inst: EpiInstance):
    """``(S(Y|M), [S(X_i|M)])`` for the instance."""
    d = 2 * inst.n
    xs, ms, cross, s_x = [], [], [], []
    for st, m in zip(inst.inputs, inst.n_memory):
        sig = st.sigma
        xs.append(sig[:d, :d])
        if m:
            ms.append(sig[d:, d:])
            cross.append(sig[:d, d:])
            s_x.append(entropy_cov(sig) - entropy_cov(sig[d:, d:]))
        else:
            cross.append(np.zeros((d, 0)))
            s_x.append(entropy_cov(sig))
    bmat = np.hstack(inst.blocks)
    sigma_y = bmat @ direct_sum(*xs) @ bmat.T
    if not ms:
        return entropy_cov(sigma_y), s_x
    sigma_m = direct_sum(*ms)
    sigma_xm = np.zeros((d * inst.k, sigma_m.shape[0]))
    col = 0
    for i, c in enumerate(cross):
        sigma_xm[d * i: d * (i + 1), col: col + c.shape[1]] = c
        col += c.shape[1]
    sigma_ym = bmat @ sigma_xm
    joint = np.block([[sigma_y, sigma_ym], [sigma_ym.T, sigma_m]])
    return entropy_cov(joint) - entropy_cov(sigma_m), s_x


def check_mcqepi(inst: EpiInstance, slack=SLACK):
    """Evaluate both sides of the exponential form of the inequality."""
    s_y, s_x = conditional_entropies(inst)
    lhs = float(np.exp(s_y / inst.n))
    rhs = float(np.sum(inst.b * np.exp(np.asarray(s_x) / inst.n)))
    margin = lhs - rhs
    return EpiVerdict(lhs, rhs, margin, bool(margin >= -slack))


def _check_lambdas(inst, lambdas):
    lam = np.asarray(lambdas, dtype=float)
    if lam.shape != (inst.k,):
        raise InvalidArgumentError(f"need {inst.k} weights, got shape {lam.shape}")
    if np.any(lam < 0) or np.any(lam > 1) or abs(lam.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("weights must lie in [0, 1] and sum to 1")
    if np.any((lam > 0) & (inst.b == 0)):
        raise InvalidArgumentError("a singular block must carry zero weight")
    return lam


def linear_form_rhs(inst, lambdas, s_x=None):
    lam = _check_lambdas(inst, lambdas)
    if s_x is None:
        s_x = conditional_entropies(inst)[1]
    x = np.asarray(s_x) / inst.n
    pos = lam > 0
    return float(np.sum(lam * x) + np.sum(lam[pos] * np.log(inst.b[pos] / lam[pos])))


def check_linear_form(inst: EpiInstance, lambdas, slack=SLACK):
    """Evaluate ``S(Y|M)/n`` against the lambda-weighted right-hand side."""
    s_y, s_x = conditional_entropies(inst)
    lhs = s_y / inst.n
    rhs = linear_form_rhs(inst, lambdas, s_x)
    margin = lhs - rhs
    return EpiVerdict(lhs, rhs, margin, bool(margin >= -slack))


def optimal_lambdas(inst: EpiInstance, s_x=None):
    """Weights ``lambda_j proportional to b_j exp(S(X_j|M)/n)`` maximizing the linear form."""
    b = inst.b
    if not np.any(b > 0):
        raise InvalidArgumentError("all blocks are singular")
    if s_x is None:
        s_x = conditional_entropies(inst)[1]
    with np.errstate(divide="ignore"):
        logits = np.log(b) + np.asarray(s_x) / inst.n
    return softmax(logits)


def run_harness(k, n, count, seed, memory_kind="mixed"):
    """Check ``count`` instances with seeds ``seed, seed + 1, ...``.

    Returns a list of ``(instance_seed, verdict)``.
    """
    if count < 1:
        raise InvalidArgumentError("count must be positive")
    out = []
    for i in range(count):
        s = int(seed) + i
        out.append((s, check_mcqepi(random_instance(k, n, s, memory_kind))))
    return out
