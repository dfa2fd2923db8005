"""Closed-form expected holdout error and the optimal train-test split.

Everything here is a high-dimensional limit formula for an inverse-Wishart
population observed through rotationally invariant multiplicative noise.
The noise enters only through the moment ratios gamma, gamma3, gamma4 of
the radial law (see noise.gamma_moments and noise.limit_gamma_moments).
"""

import math
from dataclasses import dataclass

from .errors import InfiniteMoment, NoInteriorOptimum
from .estimators import quadratic_coeffs
from .population import sigma_cross_moment_e2s, sigma_moments

QIN_CONVENTIONS = ("default", "paper-literal")


def q_in_eff(k: float, t: float, n: float, convention: str = "default") -> float:
    """Train-side aspect ratio at split ratio k = t/t_out.

    'default' is n/t_in = kn/(kt - t).  'paper-literal' evaluates
    kn/(kt - 1) instead; it is kept selectable for comparison but its error
    curve degenerates (no interior optimum in k), so the default is used
    everywhere unless explicitly requested.
    """
    if convention not in QIN_CONVENTIONS:
        raise ValueError(f"qin convention must be one of {QIN_CONVENTIONS}")
    if not k > 1:
        raise ValueError(f"need k > 1 so the train set is non-empty, got {k}")
    if convention == "paper-literal":
        return k * n / (k * t - 1.0)
    return k * n / (k * t - t)


def moment_e2(p: float, q: float, gamma: float) -> float:
    """E[tau(E^2)] = 1 + p + q gamma."""
    if q < 0:
        raise ValueError(f"aspect ratio q must be >= 0, got {q}")
    return 1.0 + p + q * gamma


def moment_e3(p: float, q: float, gamma: float, gamma3: float) -> float:
    """E[tau(E^3)] = tau(Sigma^3) + 3 q gamma tau(Sigma^2) + q^2 gamma3."""
    if gamma3 is None or math.isinf(gamma3):
        raise InfiniteMoment("moment_e3 needs a finite sixth-moment ratio gamma3")
    s2 = 1.0 + p
    s3 = 1.0 + 3.0 * p + 2.0 * p * p
    return s3 + 3.0 * q * gamma * s2 + q * q * gamma3


def moment_e4(
    p: float,
    q: float,
    gamma: float,
    gamma3: float,
    gamma4: float,
    m4_convention: str = "paper",
) -> float:
    """E[tau(E^4)] for an inverse-Wishart population under rotationally
    invariant noise:

        tau(Sigma^4) + 2 q gamma (2 tau(Sigma^3) + tau(Sigma^2)^2)
                     + 2 q^2 tau(Sigma^2) (2 gamma3 + gamma^2)
                     + q^3 gamma4.

    At p = 0 and unit gamma ratios this reduces to the Marchenko-Pastur
    fourth moment 1 + 6q + 6q^2 + q^3.  tau(Sigma^4) follows the selected
    moment-cumulant convention (see sigma_moments).
    """
    if (
        gamma3 is None
        or gamma4 is None
        or math.isinf(gamma3)
        or math.isinf(gamma4)
    ):
        raise InfiniteMoment("moment_e4 needs finite gamma3 and gamma4")
    s2 = 1.0 + p
    s3 = 1.0 + 3.0 * p + 2.0 * p * p
    s4 = sigma_moments(p, m4_convention).m4
    return (
        s4
        + 2.0 * q * gamma * (2.0 * s3 + s2 * s2)
        + 2.0 * q * q * s2 * (2.0 * gamma3 + gamma * gamma)
        + q ** 3 * gamma4
    )


def holdout_error_general(
    k: float, t: float, n: float, gamma: float, oracle_sq: float, tau_sigma2: float
) -> float:
    """Expected Frobenius error of the holdout estimator,

        [ (k/t)(3 gamma - 1) - 1 ] * oracle_sq + tau_sigma2,

    where oracle_sq = E[tau(Diag(V_in^T Sigma V_in)^2)] is supplied by the
    caller.  At gamma = 1 the prefactor reduces to 2/t_out - 1.
    """
    if not 1 < k <= t:
        raise ValueError(f"split ratio k must lie in (1, t], got {k}")
    return ((k / t) * (3.0 * gamma - 1.0) - 1.0) * oracle_sq + tau_sigma2


def oracle_sq_linear(
    k: float, t: float, n: float, p: float, gamma: float,
    qin_convention: str = "default",
) -> float:
    """E[tau(Diag^2)] when the oracle eigenvalues are the optimal linear
    shrinkage of the train spectrum: p^2/(p + q_in gamma) + 1."""
    qin = q_in_eff(k, t, n, qin_convention)
    return p * p / (p + qin * gamma) + 1.0


def holdout_error_linear(
    k: float, t: float, n: float, p: float, gamma: float,
    qin_convention: str = "default",
) -> float:
    """Expected holdout error with the linear-shrinkage oracle value."""
    return holdout_error_general(
        k,
        t,
        n,
        gamma,
        oracle_sq=oracle_sq_linear(k, t, n, p, gamma, qin_convention),
        tau_sigma2=1.0 + p,
    )


def holdout_error_quadratic(
    k: float,
    t: float,
    n: float,
    p: float,
    gamma: float,
    gamma3: float,
    gamma4: float,
    m4_convention: str = "paper",
    qin_convention: str = "default",
) -> float:
    """Expected holdout error when the oracle eigenvalues are approximated by
    the optimal quadratic polynomial of the train spectrum.

    All sample-covariance moments are evaluated at the train aspect ratio
    q_in.  With r = p/(p + q_in gamma) and
    r2 = (tau(E^3) - tau(E^2))/(p + q_in gamma), the oracle-square term is

        a1^2 [tau(E^4) - tau(E^2)^2 - r2^2 (tau(E^2) - 1)]
        + r^2 (tau(E^2) - 1) + 1,

    which collapses to the linear value when a1 = 0.
    """
    qin = q_in_eff(k, t, n, qin_convention)
    te2 = moment_e2(p, qin, gamma)
    te3 = moment_e3(p, qin, gamma, gamma3)
    te4 = moment_e4(p, qin, gamma, gamma3, gamma4, m4_convention)
    coeffs = quadratic_coeffs(
        tau_e=1.0,
        tau_e2=te2,
        tau_e3=te3,
        tau_e4=te4,
        tau_es=1.0 + p,
        tau_e2s=sigma_cross_moment_e2s(p, qin, gamma),
    )
    denom = p + qin * gamma
    r = p / denom
    r2 = (te3 - te2) / denom
    script_e = (
        coeffs.a1 ** 2 * (te4 - te2 * te2 - r2 * r2 * (te2 - 1.0))
        + r * r * (te2 - 1.0)
        + 1.0
    )
    return holdout_error_general(
        k, t, n, gamma, oracle_sq=script_e, tau_sigma2=1.0 + p
    )


def optimal_k_exact(n: float, t: float, p: float, q: float, gamma: float) -> float:
    """Closed-form minimizer of holdout_error_linear over real k in (1, t].

    With c = p + gamma q and a = (3 gamma - 1)/t,

        k_opt = (p/c) (1 + sqrt( gamma q (c - a p) / (a (c + p^2)) )).

    An interior optimum needs gamma > 1/3; it also needs the stationary
    point to land inside (1, t], which fails when p is small against
    gamma q (the error is then monotone on the whole range).  Pass q = None
    to use n/t.
    """
    if q is None:
        q = n / t
    if not gamma > 1.0 / 3.0:
        raise NoInteriorOptimum("no interior optimum (gamma <= 1/3)")
    c = p + gamma * q
    a = (3.0 * gamma - 1.0) / t
    disc = gamma * q * (c - a * p) / (a * (c + p * p))
    if disc < 0:
        raise NoInteriorOptimum("no interior optimum for these parameters")
    k_opt = (p / c) * (1.0 + math.sqrt(disc))
    if not 1.0 < k_opt <= t:
        raise NoInteriorOptimum(
            f"no interior optimum (stationary point k={k_opt:.4g} outside (1, t])"
        )
    return k_opt


def optimal_k_asymptotic(n: float, p: float, q: float, gamma: float) -> float:
    """Large-n optimal split ratio,

        p sqrt(gamma n) / sqrt((3 gamma - 1)(p + q gamma)(p + p^2 + q gamma)),

    growing like sqrt(n) at fixed p and q."""
    if not gamma > 1.0 / 3.0:
        raise NoInteriorOptimum("no interior optimum (gamma <= 1/3)")
    c = p + q * gamma
    return p * math.sqrt(gamma * n) / math.sqrt(
        (3.0 * gamma - 1.0) * c * (c + p * p)
    )


@dataclass(frozen=True)
class CurvePoint:
    """One grid point of an expected-error curve."""

    k: float
    t_out: int
    error_linear: float
    error_quadratic: float | None = None


@dataclass(frozen=True)
class ErrorCurve:
    """Expected error sampled on an integer t_out grid."""

    points: tuple


def error_curve(
    n: int,
    t: int,
    p: float,
    gamma: float,
    gamma3: float | None = None,
    gamma4: float | None = None,
    t_out_grid=None,
    quadratic: bool = False,
    m4_convention: str = "paper",
    qin_convention: str = "default",
) -> ErrorCurve:
    """Evaluate the expected holdout error over an integer t_out grid
    (default: every t_out in 1..t-1); k = t/t_out."""
    if t_out_grid is None:
        t_out_grid = range(1, t)
    pts = []
    for t_out in t_out_grid:
        t_out = int(t_out)
        if not 1 <= t_out <= t - 1:
            raise ValueError(f"t_out must lie in [1, t-1], got {t_out}")
        k = t / t_out
        lin = holdout_error_linear(k, t, n, p, gamma, qin_convention)
        quad = None
        if quadratic:
            quad = holdout_error_quadratic(
                k, t, n, p, gamma, gamma3, gamma4, m4_convention, qin_convention
            )
        pts.append(
            CurvePoint(k=k, t_out=t_out, error_linear=lin, error_quadratic=quad)
        )
    return ErrorCurve(points=tuple(pts))
