"""White inverse-Wishart population ensemble and its limiting tracial moments."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSystem
from .linalg import eigh


@dataclass(frozen=True)
class InverseWishartModel:
    """Inverse-Wishart ensemble of dimension n and shape p > 0.

    q_star = p/(1+p) is the aspect ratio of the underlying white Wishart and
    t_w = floor(n/q_star) its column count; t_w > n keeps the Wishart
    invertible.  The normalization (1 - q_star) makes tau(Sigma) -> 1.
    """

    n: int
    p: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"dimension n must be >= 1, got {self.n}")
        if not self.p > 0:
            raise ValueError(f"shape p must be > 0, got {self.p}")
        if not self.t_w > self.n:
            raise ValueError(
                f"underlying Wishart needs t_w > n, got t_w={self.t_w}, n={self.n}"
            )

    @property
    def q_star(self) -> float:
        return self.p / (1.0 + self.p)

    @property
    def t_w(self) -> int:
        return int(math.floor(self.n / self.q_star))


_MAX_RETRIES = 3
_COND_LIMIT = 1e12


def sample_inverse_wishart(model: InverseWishartModel, seed: int) -> np.ndarray:
    """Draw Sigma = (1 - q_star) W^{-1} with W = (1/t_w) M M^T, M an n x t_w
    standard normal matrix.

    A draw whose condition number exceeds 1e12 is redrawn with an
    incremented sub-seed, at most 3 retries.
    """
    n, t_w = model.n, model.t_w
    if not t_w > n + 1:
        raise ValueError(f"sampling needs t_w > n + 1, got t_w={t_w}, n={n}")
    for attempt in range(_MAX_RETRIES + 1):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), attempt)))
        m = rng.standard_normal((n, t_w))
        w = (m @ m.T) / t_w
        spec = eigh(w)
        lo, hi = float(spec.eigenvalues[0]), float(spec.eigenvalues[-1])
        if lo > 0.0 and hi / lo < _COND_LIMIT:
            inv_vals = (1.0 - model.q_star) / spec.eigenvalues
            v = spec.vectors
            sigma = (v * inv_vals) @ v.T
            return (sigma + sigma.T) / 2.0
    raise DegenerateSystem(
        f"wishart draw stayed ill-conditioned after {_MAX_RETRIES} retries"
    )


@dataclass(frozen=True)
class SigmaMoments:
    """Limiting tracial moments tau(Sigma^k), k = 1..4."""

    m1: float
    m2: float
    m3: float
    m4: float


M4_CONVENTIONS = ("paper", "free")


def sigma_moments(p: float, convention: str = "paper") -> SigmaMoments:
    """Limiting moments of the inverse-Wishart spectral distribution.

    The first three are 1, 1+p, 1+3p+2p^2.  The fourth follows from the
    cumulants (1, p, 2p^2, 5p^3) and depends on the moment-cumulant
    recursion used to recombine them: the classical one gives
    1+6p+11p^2+5p^3 ('paper'), the non-crossing one 1+6p+10p^2+5p^3
    ('free').  Monte Carlo at large n matches 'free'; both are selectable.
    """
    if not p >= 0:
        raise ValueError(f"shape p must be >= 0, got {p}")
    if convention not in M4_CONVENTIONS:
        raise ValueError(f"convention must be one of {M4_CONVENTIONS}")
    c = 11.0 if convention == "paper" else 10.0
    return SigmaMoments(
        m1=1.0,
        m2=1.0 + p,
        m3=1.0 + 3.0 * p + 2.0 * p * p,
        m4=1.0 + 6.0 * p + c * p * p + 5.0 * p ** 3,
    )


def sigma_cross_moment_e2s(p: float, q: float, gamma: float) -> float:
    """E[tau(E^2 Sigma)] = tau(Sigma^3) + q gamma tau(Sigma^2) for a sample
    covariance E at aspect ratio q over an inverse-Wishart population."""
    if q < 0:
        raise ValueError(f"aspect ratio q must be >= 0, got {q}")
    return (1.0 + 3.0 * p + 2.0 * p * p) + q * gamma * (1.0 + p)
