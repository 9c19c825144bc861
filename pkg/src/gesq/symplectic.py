"""Dense symplectic linear algebra.

Conventions: quadratures are interleaved as (Q1, P1, Q2, P2, ...) and the
symplectic form is the direct sum of ``[[0, 1], [-1, 0]]`` blocks.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag, eigh

from .errors import InvalidArgumentError, NumericalFailure

#: default tolerance for the Williamson reconstruction, relative to the norm of sigma
TOL_WILLIAMSON = 1e-8
#: default tolerance for symplecticity, scaled by max(1, |S|^2)
TOL_SYMPLECTIC = 1e-10
#: relative tolerance of the block-determinant identity
TOL_BLOCK_IDENTITY = 1e-8


def symplectic_form(n):
    """Return the 2n x 2n symplectic form for ``n`` modes."""
    n = int(n)
    if n < 1:
        raise InvalidArgumentError(f"number of modes must be positive, got {n}")
    omega = np.zeros((2 * n, 2 * n))
    idx = np.arange(0, 2 * n, 2)
    omega[idx, idx + 1] = 1.0
    omega[idx + 1, idx] = -1.0
    return omega


def z_matrix(n):
    """Return ``Z_{2n} = diag(1, -1, 1, -1, ...)``."""
    return np.diag(np.tile([1.0, -1.0], int(n)))


def _square_even(m, name="matrix"):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidArgumentError(f"{name} must be square, got shape {m.shape}")
    if m.shape[0] == 0 or m.shape[0] % 2:
        raise InvalidArgumentError(f"{name} must have even nonzero dimension, got {m.shape[0]}")
    return m


def symplectic_residual(m):
    """Max-norm of ``M Delta M^T - Delta``."""
    m = _square_even(m)
    omega = symplectic_form(m.shape[0] // 2)
    return float(np.max(np.abs(m @ omega @ m.T - omega)))


def is_symplectic(m, tol=None):
    """Check whether ``m`` preserves the symplectic form.

    Args:
        m: square matrix of even dimension.
        tol: absolute tolerance on the max-norm residual. By default
            ``1e-10 * max(1, |m|_2^2)``.
    """
    m = _square_even(m)
    if tol is None:
        tol = TOL_SYMPLECTIC * max(1.0, np.linalg.norm(m, 2) ** 2)
    return symplectic_residual(m) <= tol


def symplectic_inverse(s):
    """Inverse of a symplectic matrix, ``-Delta S^T Delta``."""
    s = _square_even(s)
    omega = symplectic_form(s.shape[0] // 2)
    return -omega @ s.T @ omega


def direct_sum(*blocks):
    return block_diag(*[np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks])


def mode_permutation_matrix(perm):
    """Quadrature-level permutation matrix ``P`` with ``(P x)_k = x_{perm[k]}`` mode-wise."""
    perm = np.asarray(perm, dtype=int)
    n = len(perm)
    if sorted(perm.tolist()) != list(range(n)):
        raise InvalidArgumentError(f"not a permutation: {perm.tolist()}")
    p = np.zeros((2 * n, 2 * n))
    for new, old in enumerate(perm):
        p[2 * new, 2 * old] = 1.0
        p[2 * new + 1, 2 * old + 1] = 1.0
    return p


def _check_spd(sigma, name="sigma"):
    sigma = _square_even(sigma, name)
    scale = max(1.0, np.max(np.abs(sigma)))
    if np.max(np.abs(sigma - sigma.T)) > 1e-10 * scale:
        raise InvalidArgumentError(f"{name} is not symmetric")
    sigma = 0.5 * (sigma + sigma.T)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise InvalidArgumentError(f"{name} is not positive definite") from None
    return sigma, chol


def symplectic_eigenvalues(sigma):
    """Symplectic eigenvalues of a symmetric positive-definite matrix.

    They are the moduli of the eigenvalues of ``Delta^{-1} sigma``. With
    ``sigma = L L^T`` the matrix ``i L^T Delta L`` is Hermitian and similar to
    ``i Delta sigma``, so its positive eigenvalues are exactly the symplectic
    eigenvalues and come out of a Hermitian solver.

    Returns:
        ndarray of n values in ascending order.
    """
    sigma, chol = _check_spd(sigma)
    n = sigma.shape[0] // 2
    omega = symplectic_form(n)
    herm = 1j * (chol.T @ omega @ chol)
    evals = np.linalg.eigvalsh(herm)
    # eigenvalues come in +/- pairs; keep the positive half
    return np.sort(evals[n:])


def antisymmetric_canonical(b):
    """Orthogonal block-diagonalization of a nonsingular antisymmetric matrix.

    Finds orthogonal ``O`` and positive ``b_j`` with
    ``O^T b O = direct_sum_j [[0, b_j], [-b_j, 0]]``.

    The eigenvectors ``w_j = u_j + i v_j`` of the Hermitian matrix ``-i b`` for
    its positive eigenvalues ``b_j`` give the columns ``sqrt(2) u_j, sqrt(2) v_j``.
    The phase of each ``w_j`` is fixed so that its first non-negligible
    component is real and positive, which makes the first nonzero component of
    ``u_j`` positive. Pairs are returned with ``b_j`` in ascending order.

    Returns:
        (O, bvals)
    """
    b = _square_even(b, "b")
    scale = max(np.max(np.abs(b)), np.finfo(float).tiny)
    if np.max(np.abs(b + b.T)) > 1e-10 * scale:
        raise InvalidArgumentError("b is not antisymmetric")
    b = 0.5 * (b - b.T)
    n = b.shape[0] // 2
    evals, vecs = eigh(-1j * b)
    pos = evals[n:]
    if pos[0] <= 1e-13 * scale:
        raise InvalidArgumentError("b is singular")
    vecs = vecs[:, n:]
    o = np.empty_like(b)
    for j in range(n):
        w = vecs[:, j]
        mags = np.abs(w)
        k = int(np.argmax(mags > 1e-8 * mags.max()))
        w = w * (np.conj(w[k]) / mags[k])
        o[:, 2 * j] = np.sqrt(2.0) * w.real
        o[:, 2 * j + 1] = np.sqrt(2.0) * w.imag
    # u_j and v_j are orthogonal only up to eps * |b| / b_j; snap O to the
    # nearest orthogonal matrix (polar factor)
    left, _, right = np.linalg.svd(o)
    return left @ right, pos.copy()


def normalize_canonical(b):
    """Matrix ``M`` with ``M^T b M = Delta`` for nonsingular antisymmetric ``b``.

    ``M = O A`` with ``O`` from :func:`antisymmetric_canonical` and ``A`` the
    direct sum of ``I_2 / sqrt(b_j)`` blocks, each of determinant ``1 / b_j``.

    Returns:
        (M, bvals)
    """
    o, bvals = antisymmetric_canonical(b)
    a = np.repeat(1.0 / np.sqrt(bvals), 2)
    return o * a[np.newaxis, :], bvals


@dataclass(frozen=True)
class WilliamsonResult:
    """Symplectic ``s`` with ``s @ sigma @ s.T = diag(nu_1, nu_1, nu_2, nu_2, ...)``."""

    s: np.ndarray
    nu: np.ndarray
    residual: float


def williamson(sigma, tol=TOL_WILLIAMSON):
    """Williamson decomposition of a symmetric positive-definite matrix.

    With ``B = sigma^{-1/2} Delta sigma^{-1/2}`` and ``M^T B M = Delta`` the
    matrix ``S = M^T sigma^{-1/2}`` is symplectic and brings ``sigma`` to
    ``direct_sum(nu_k I_2)`` with ``nu_k = 1 / b_k``. The symplectic eigenvalues
    come out in nondecreasing order.

    Raises:
        InvalidArgumentError: sigma is not symmetric positive definite.
        NumericalFailure: the reconstruction residual, relative to ``|sigma|``,
            exceeds ``tol``.
    """
    sigma, _ = _check_spd(sigma)
    n = sigma.shape[0] // 2
    lam, vec = np.linalg.eigh(sigma)
    if lam[0] <= 0:
        raise InvalidArgumentError("sigma is not positive definite")
    inv_sqrt = (vec / np.sqrt(lam)) @ vec.T
    bmat = inv_sqrt @ symplectic_form(n) @ inv_sqrt
    m, bvals = normalize_canonical(bmat)
    # ascending b means descending nu; flip the mode order
    order = np.arange(n)[::-1]
    p = mode_permutation_matrix(order)
    s = p @ m.T @ inv_sqrt
    nu = 1.0 / bvals[order]

    diag = np.repeat(nu, 2)
    norm = np.linalg.norm(sigma, 2)
    residual = float(np.max(np.abs(s @ sigma @ s.T - np.diag(diag))) / max(1.0, norm))
    if residual > tol:
        raise NumericalFailure(
            f"Williamson reconstruction residual {residual:.3e} exceeds {tol:.1e}", residual
        )
    return WilliamsonResult(s=s, nu=nu, residual=residual)


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks of a 4n x 4n symplectic matrix ``[[B1C, B2C], [B1D, B2D]]``.

    ``b1c`` ... ``b2d`` hold ``|det B|^{1/n}`` of the corresponding block.
    """

    B1C: np.ndarray
    B2C: np.ndarray
    B1D: np.ndarray
    B2D: np.ndarray
    b1c: float
    b2c: float
    b1d: float
    b2d: float

    @property
    def n(self):
        return self.B1C.shape[0] // 2

    @property
    def b_vals(self):
        return (self.b1c, self.b2c, self.b1d, self.b2d)


def block_decompose(s, tol=TOL_BLOCK_IDENTITY):
    """Split a 4n x 4n symplectic matrix into its four 2n x 2n blocks.

    Checks the identity ``b1c * b1d = b2c * b2d`` that every symplectic matrix
    obeys, and raises :class:`NumericalFailure` when it is violated beyond
    ``tol`` (relative), which signals a non-symplectic input.
    """
    s = _square_even(s, "s")
    if s.shape[0] % 4:
        raise InvalidArgumentError(f"dimension must be a multiple of 4, got {s.shape[0]}")
    h = s.shape[0] // 2
    n = h // 2
    blocks = s[:h, :h], s[:h, h:], s[h:, :h], s[h:, h:]
    vals = []
    for blk in blocks:
        sign, logdet = np.linalg.slogdet(blk)
        vals.append(0.0 if sign == 0 else float(np.exp(logdet / n)))
    b1c, b2c, b1d, b2d = vals
    lhs, rhs = b1c * b1d, b2c * b2d
    if abs(lhs - rhs) > tol * max(1.0, lhs, rhs):
        raise NumericalFailure(
            f"block identity violated: b1c*b1d={lhs:.12g}, b2c*b2d={rhs:.12g}", abs(lhs - rhs)
        )
    return BlockDecomposition(*(np.array(b) for b in blocks), b1c, b2c, b1d, b2d)
