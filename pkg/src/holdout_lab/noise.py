"""Rotationally invariant noise via the radial decomposition xi = s * u.

u is uniform on the unit sphere and s is a scalar radial factor with
E[s^2] = n, so that E[xi xi^T] is the identity.  Since |u| = 1, every
tracial moment Tr((xi xi^T)^k) = |xi|^(2k) = s^(2k) reduces to a raw moment
of s, which makes the kurtosis-type ratios gamma, gamma3, gamma4 closed
form.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedLaw

KINDS = ("gaussian", "sphere", "gaussnorm", "student", "laplace")

_DOUBLE_FACTORIAL = {1: 1, 2: 3, 3: 15, 4: 105}  # (2j-1)!! for j = 1..4


@dataclass(frozen=True)
class RadialLaw:
    """Radial factor s of the decomposition xi = s * u in dimension n.

    kind:
      gaussian  s = chi_n, making xi a standard normal vector
      sphere    s = sqrt(n) constant, xi uniform on the radius-sqrt(n) sphere
      gaussnorm s normal with standard deviation sqrt(n)
      student   s = sqrt((nu-2) n / nu) * t_nu, needs nu > 4
      laplace   s Laplace with scale sqrt(n/2)

    Signed draws are kept signed; u is symmetric, so the law of xi is
    unchanged.
    """

    kind: str
    n: int
    nu: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnsupportedLaw(f"unknown radial law {self.kind!r}")
        if self.n < 1:
            raise ValueError(f"ambient dimension n must be >= 1, got {self.n}")
        if self.kind == "student":
            if self.nu is None or not self.nu > 4:
                raise UnsupportedLaw(
                    f"student law needs nu > 4, got nu={self.nu} "
                    "(infinite fourth moment)"
                )
        elif self.nu is not None:
            raise ValueError("nu is only meaningful for the student law")

    @property
    def label(self) -> str:
        if self.kind == "student":
            return f"student:{self.nu:g}"
        return self.kind


def parse_radial(name: str, n: int) -> RadialLaw:
    """Build a RadialLaw from its command-line name:
    gaussian | sphere | gaussnorm | student:<nu> | laplace."""
    s = name.strip().lower()
    if s.startswith("student:"):
        try:
            nu = float(s.split(":", 1)[1])
        except ValueError as exc:
            raise UnsupportedLaw(f"bad student parameter in {name!r}") from exc
        return RadialLaw(kind="student", n=n, nu=nu)
    if s == "student":
        raise UnsupportedLaw("student law needs a parameter, e.g. student:6")
    return RadialLaw(kind=s, n=n)


def raw_moment(law: RadialLaw, order: int) -> float:
    """Closed-form raw moment E[s^order], order in {2, 4, 6, 8}.

    Student moments are finite only for nu > order; math.inf is returned
    otherwise.  Each closed form below was checked against 1-D quadrature
    of the corresponding density.
    """
    if order not in (2, 4, 6, 8):
        raise ValueError(f"order must be one of 2, 4, 6, 8, got {order}")
    j = order // 2
    n = law.n
    if law.kind == "gaussian":
        # chi-square moments: n (n+2) ... (n+2j-2)
        out = 1.0
        for i in range(j):
            out *= n + 2 * i
        return float(out)
    if law.kind == "sphere":
        return float(n) ** j
    if law.kind == "gaussnorm":
        return _DOUBLE_FACTORIAL[j] * float(n) ** j
    if law.kind == "laplace":
        return float(math.factorial(2 * j)) * (n / 2.0) ** j
    nu = law.nu
    if nu <= order:
        return math.inf
    # scaled Student: ((nu-2) n)^j * prod_{i<=j} (2i-1)/(nu-2i)
    out = ((nu - 2.0) * n) ** j
    for i in range(1, j + 1):
        out *= (2 * i - 1) / (nu - 2 * i)
    return float(out)


@dataclass(frozen=True)
class GammaMoments:
    """Normalized even-moment ratios of a radial law.

    gamma = m4/(n(n+2)); gamma3 = m6/(n(n+2)(n+4)); gamma4 =
    m8/(n(n+2)(n+4)(n+6)).  gamma3/gamma4 are None when the raw moments are
    infinite.
    """

    gamma: float
    gamma3: float | None = None
    gamma4: float | None = None


def gamma_moments(law: RadialLaw) -> GammaMoments:
    """Finite-n moment ratios of the law."""
    n = law.n
    m4 = raw_moment(law, 4)
    if math.isinf(m4):
        raise UnsupportedLaw("infinite fourth moment (student nu <= 4)")
    m6 = raw_moment(law, 6)
    m8 = raw_moment(law, 8)
    return GammaMoments(
        gamma=m4 / (n * (n + 2.0)),
        gamma3=None if math.isinf(m6) else m6 / (n * (n + 2.0) * (n + 4.0)),
        gamma4=None if math.isinf(m8) else m8 / (n * (n + 2.0) * (n + 4.0) * (n + 6.0)),
    )


def limit_gamma_moments(law: RadialLaw) -> GammaMoments:
    """Large-n limits of the moment ratios, m_{2k}/n^k.

    These constants are the coefficients entering the expected-error
    formulas: gaussian and sphere give (1, 1, 1), gaussnorm (3, 15, 105),
    laplace (6, 90, 2520), student nu the ratios below (finite for nu > 6
    and nu > 8 respectively).
    """
    if law.kind in ("gaussian", "sphere"):
        return GammaMoments(gamma=1.0, gamma3=1.0, gamma4=1.0)
    if law.kind == "gaussnorm":
        return GammaMoments(gamma=3.0, gamma3=15.0, gamma4=105.0)
    if law.kind == "laplace":
        return GammaMoments(gamma=6.0, gamma3=90.0, gamma4=2520.0)
    nu = law.nu
    gamma = 3.0 * (nu - 2.0) / (nu - 4.0)
    gamma3 = None
    gamma4 = None
    if nu > 6:
        gamma3 = 15.0 * (nu - 2.0) ** 2 / ((nu - 4.0) * (nu - 6.0))
    if nu > 8:
        gamma4 = 105.0 * (nu - 2.0) ** 3 / ((nu - 4.0) * (nu - 6.0) * (nu - 8.0))
    return GammaMoments(gamma=gamma, gamma3=gamma3, gamma4=gamma4)


def _draw_radius(law: RadialLaw, rng: np.random.Generator) -> float:
    n = law.n
    if law.kind == "gaussian":
        return math.sqrt(rng.chisquare(n))
    if law.kind == "sphere":
        return math.sqrt(n)
    if law.kind == "gaussnorm":
        return math.sqrt(n) * rng.standard_normal()
    if law.kind == "laplace":
        return rng.laplace(0.0, math.sqrt(n / 2.0))
    return math.sqrt((law.nu - 2.0) * n / law.nu) * rng.standard_t(law.nu)


def sample_noise_matrix(law: RadialLaw, n: int, t: int, seed: int) -> np.ndarray:
    """n x t matrix with i.i.d. columns xi = s * u.

    Column j is a deterministic function of (seed, j) only, so any chunking
    or thread schedule reproduces the same matrix.
    """
    if law.n != n:
        raise ValueError(f"law was built for n={law.n}, asked to sample n={n}")
    if n < 1 or t < 1:
        raise ValueError(f"need n >= 1 and t >= 1, got n={n}, t={t}")
    out = np.empty((n, t))
    for j in range(t):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), j)))
        g = rng.standard_normal(n)
        u = g / np.linalg.norm(g)
        out[:, j] = _draw_radius(law, rng) * u
    return out
