"""Squashed-entanglement bounds for multimode Gaussian channels.

Modules:
    symplectic  symplectic forms, symplectic eigenvalues, Williamson decomposition
    gaussian    Gaussian states and channels, JSON I/O
    entropy     von Neumann entropies of Gaussian states
    bounds      extremality test, state and channel bounds
    epi         verification harness for the conditional entropy power inequality
    cli         command-line front end
"""

from .errors import (
    GesqError,
    HalfEigenvalueWarning,
    InvalidArgumentError,
    NumericalFailure,
    UnsupportedDegenerateError,
)

__version__ = "0.1.0"
