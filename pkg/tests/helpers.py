"""Random matrices for property tests, generated independently of the package."""

import numpy as np
from scipy.linalg import expm


def omega(n):
    m = np.zeros((2 * n, 2 * n))
    for k in range(n):
        m[2 * k, 2 * k + 1] = 1.0
        m[2 * k + 1, 2 * k] = -1.0
    return m


def random_spd(n, rng, cond=50.0):
    q, _ = np.linalg.qr(rng.normal(size=(2 * n, 2 * n)))
    lam = np.exp(rng.uniform(0.0, np.log(cond), size=2 * n))
    return (q * lam) @ q.T


def random_symplectic(n, rng, scale=0.4):
    """exp(Delta H) with H symmetric is symplectic."""
    h = rng.normal(scale=scale, size=(2 * n, 2 * n))
    return expm(omega(n) @ (h + h.T) / 2.0)


def random_pure_cov(n, rng, scale=0.4):
    s = random_symplectic(n, rng, scale)
    return 0.5 * s @ s.T


def random_state_cov(n, rng, scale=0.4):
    """Williamson form built by hand: S diag(nu) S^T with nu >= 1/2."""
    s = random_symplectic(n, rng, scale)
    nu = 0.5 + rng.exponential(1.0, size=n)
    return s @ np.diag(np.repeat(nu, 2)) @ s.T


def random_extreme_output(n, rng):
    """Half of a random pure 2n-mode state sent through a random extreme channel.

    The channel comes from a random symplectic dilation with a pure n-mode
    environment. Returns None when the extremality test does not certify it
    (an ill-conditioned Delta - K Delta K^T inflates the residual past 1e-8).
    """
    from gesq.bounds import extremality_test

    s_in = random_symplectic(2 * n, rng, 0.3)
    sigma = 0.5 * s_in @ s_in.T
    s_env = random_symplectic(n, rng, 0.3)
    u = random_symplectic(2 * n, rng, 0.3)
    k = u[:2 * n, :2 * n]
    s_se = u[:2 * n, 2 * n:]
    alpha = s_se @ (0.5 * s_env @ s_env.T) @ s_se.T
    if not extremality_test(k, alpha):
        return None
    lift = np.eye(4 * n)
    lift[2 * n:, 2 * n:] = k
    out = lift @ sigma @ lift.T
    out[2 * n:, 2 * n:] += alpha
    return out
