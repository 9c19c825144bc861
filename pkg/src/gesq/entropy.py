"""Von Neumann entropies of Gaussian states (natural logarithms)."""

import numpy as np

from .errors import InvalidArgumentError
from .gaussian import GaussianState, partial_trace
from .symplectic import symplectic_eigenvalues

SERIES_THRESHOLD = 1e8
NEG_CLAMP = 1e-12
NU_CLIP = 1e-9


def _g_scalar(x):
    if x < 0:
        if x < -NEG_CLAMP:
            raise InvalidArgumentError(f"g is defined for x >= 0, got {x}")
        return 0.0
    if x == 0:
        return 0.0
    if x > SERIES_THRESHOLD:
        return np.log(x) + 1.0 + 1.0 / (2.0 * x) - 1.0 / (6.0 * x * x)
    # (x+1) ln(x+1) - x ln x rewritten without cancellation
    if x < 1.0:
        return np.log1p(x) + x * (np.log1p(x) - np.log(x))
    return np.log1p(x) + x * np.log1p(1.0 / x)


def g(x):
    """Entropy of a single-mode thermal state with ``x`` mean photons.

    ``g(x) = (x + 1) ln(x + 1) - x ln x``, with ``g(0) = 0``. Accepts scalars or
    arrays. Values in ``(-1e-12, 0)`` are treated as 0.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return float(_g_scalar(float(arr)))
    return np.array([_g_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


def entropy_from_nu(nu, clip=NU_CLIP):
    """Sum of ``g(nu_k - 1/2)``; eigenvalues within ``clip`` below 1/2 count as 1/2."""
    nu = np.asarray(nu, dtype=float)
    low = nu < 0.5 - clip
    if np.any(low):
        raise InvalidArgumentError(f"symplectic eigenvalue {nu[low].min():.12g} is below 1/2")
    return float(sum(_g_scalar(max(v - 0.5, 0.0)) for v in nu))


def entropy_cov(sigma, clip=NU_CLIP):
    """Entropy of the Gaussian state with covariance ``sigma``."""
    return entropy_from_nu(symplectic_eigenvalues(sigma), clip)


def entropy(st: GaussianState):
    return entropy_cov(st.sigma)


def _disjoint(st, *groups):
    idx = [st.indices(g) for g in groups]
    flat = [i for grp in idx for i in grp]
    if len(set(flat)) != len(flat):
        raise InvalidArgumentError("mode groups overlap")
    if any(not grp for grp in idx):
        raise InvalidArgumentError("mode groups must be nonempty")
    return idx


def _s(st, *groups):
    return entropy(partial_trace(st, [i for grp in groups for i in grp]))


def conditional_entropy(st, a, b):
    """``S(A|B) = S(AB) - S(B)``."""
    a, b = _disjoint(st, a, b)
    return _s(st, a, b) - _s(st, b)


def mutual_information(st, a, b):
    """``I(A:B) = S(A) + S(B) - S(AB)``."""
    a, b = _disjoint(st, a, b)
    return _s(st, a) + _s(st, b) - _s(st, a, b)


def conditional_mutual_information(st, a, b, r):
    """``I(A:B|R) = S(AR) + S(BR) - S(ABR) - S(R)``."""
    a, b, r = _disjoint(st, a, b, r)
    return _s(st, a, r) + _s(st, b, r) - _s(st, a, b, r) - _s(st, r)


def g_of_shifted_symplectic_asymptotic(u, t, i):
    """Leading large-``t`` behaviour ``g(t nu_i(U) - 1/2)``.

    For SPD ``U`` and any symmetric ``V`` the i-th ordered symplectic
    eigenvalue satisfies ``g(nu_i(tU + V) - 1/2) / g(t nu_i(U) - 1/2) -> 1``.
    """
    if t <= 0:
        raise InvalidArgumentError(f"t must be positive, got {t}")
    nu = symplectic_eigenvalues(u)
    return g(t * nu[i] - 0.5)
