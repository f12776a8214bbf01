"""Two-level hidden-variable model of the spin singlet.

Closed forms, independent quadrature and Monte Carlo oracles, reference
baselines and region analysis for the CHSH quantity ``F``.
"""

from .closedform import ChshQuartet, alpha_tilde, chi, f_quantum, f_tau, gamma
from .geometry import Direction, HiddenPoint, omega_hat, rotated_pair
from .hvmodel import SingletModel, TwoLevelModel, full_expectation, intermediate_correlation
from .montecarlo import McConfig, estimate_correlation, estimate_F

__version__ = "0.1.0"

__all__ = [
    "ChshQuartet",
    "Direction",
    "HiddenPoint",
    "McConfig",
    "SingletModel",
    "TwoLevelModel",
    "alpha_tilde",
    "chi",
    "estimate_F",
    "estimate_correlation",
    "f_quantum",
    "f_tau",
    "full_expectation",
    "gamma",
    "intermediate_correlation",
    "omega_hat",
    "rotated_pair",
]
