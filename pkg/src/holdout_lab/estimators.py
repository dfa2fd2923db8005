"""Covariance estimators: sample covariance, linear and quadratic shrinkage,
oracle, holdout, k-fold cross-validation, and eigenvalue cleaning."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSystem
from .linalg import eigh

_ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class SplitPlan:
    """Bookkeeping for splitting t observations in dimension n with the last
    t_out columns held out."""

    n: int
    t: int
    t_out: int

    def __post_init__(self):
        if not 1 <= self.t_out <= self.t - 1:
            raise ValueError(
                f"t_out must lie in [1, t-1], got t_out={self.t_out}, t={self.t}"
            )

    @property
    def t_in(self) -> int:
        return self.t - self.t_out

    @property
    def k(self) -> float:
        return self.t / self.t_out

    @property
    def q_in(self) -> float:
        return self.n / self.t_in

    @property
    def q_out(self) -> float:
        return self.n / self.t_out


def sample_covariance(data) -> np.ndarray:
    """(1/m) sum of column outer products.

    No mean subtraction: observations are centered by construction.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[1] < 1:
        raise ValueError("data must be an n x m matrix with m >= 1")
    e = (data @ data.T) / data.shape[1]
    return (e + e.T) / 2.0


def linear_shrink(e, r: float) -> np.ndarray:
    """r e + (1 - r) identity."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"shrinkage coefficient r must lie in [0, 1], got {r}")
    e = np.asarray(e, dtype=float)
    out = r * e
    out[np.diag_indices_from(out)] += 1.0 - r
    return out


def optimal_linear_r(tau_sigma2: float, tau_e2: float) -> float:
    """Error-minimizing linear shrinkage coefficient
    (tau_sigma2 - 1)/(tau_e2 - 1), clipped to [0, 1]."""
    if not tau_e2 > 1.0:
        raise DegenerateSystem(
            f"tau(E^2) must exceed 1 for linear shrinkage, got {tau_e2}"
        )
    return float(min(1.0, max(0.0, (tau_sigma2 - 1.0) / (tau_e2 - 1.0))))


def oracle_estimator(v, target) -> np.ndarray:
    """V Diag(V^T target V) V^T, the best Frobenius approximation of target
    among matrices diagonal in the basis V."""
    v = np.asarray(v, dtype=float)
    target = np.asarray(target, dtype=float)
    if np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) > _ORTHO_TOL:
        raise ValueError("v must have orthonormal columns")
    d = np.einsum("ji,jk,ki->i", v, target, v)  # diagonal of V^T target V
    return (v * d) @ v.T


def holdout_estimator(train, test) -> np.ndarray:
    """Eigenvectors from the train sample covariance, eigenvalues from the
    test sample covariance projected onto that basis."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    if train.shape[0] != test.shape[0]:
        raise ValueError("train and test must share the ambient dimension")
    v_in = eigh(sample_covariance(train)).vectors
    e_out = sample_covariance(test)
    return oracle_estimator(v_in, e_out)


def kfold_estimator(data, t_out: int, seed: int | None = None) -> np.ndarray:
    """Average of the k = t/t_out holdout estimators over a disjoint test
    partition.

    Columns are shuffled once with the given seed (None keeps the natural
    order), then cut into k contiguous blocks; block l is the test set of
    fold l.  Folds are summed in index order, so the result is independent
    of any parallel schedule.
    """
    data = np.asarray(data, dtype=float)
    n, t = data.shape
    if t_out < 1 or t % t_out != 0 or t_out >= t:
        raise ValueError(
            f"t_out must be a proper divisor of t, got t_out={t_out}, t={t}"
        )
    cols = np.arange(t)
    if seed is not None:
        rng = np.random.default_rng(np.random.SeedSequence((int(seed),)))
        rng.shuffle(cols)
    k = t // t_out
    acc = np.zeros((n, n))
    for fold in range(k):
        test_idx = cols[fold * t_out : (fold + 1) * t_out]
        train_idx = np.concatenate(
            [cols[: fold * t_out], cols[(fold + 1) * t_out :]]
        )
        acc += holdout_estimator(data[:, train_idx], data[:, test_idx])
    return acc / k


def ledoit_peche_rie(e, q: float, eta: float | None = None) -> np.ndarray:
    """Rotationally invariant eigenvalue cleaning.

    Each sample eigenvalue lam is mapped to lam/|1 - q + q lam g(z)|^2 with
    z = lam - i eta and g the Stieltjes transform of the sample spectrum,
    g(z) = (1/n) sum_i 1/(z - lam_i).  The cleaned spectrum is rescaled to
    preserve the normalized trace of the input; eigenvectors are unchanged.
    Default bandwidth eta = n^(-1/2).
    """
    if not q > 0:
        raise ValueError(f"aspect ratio q must be > 0, got {q}")
    spec = eigh(e)
    lam = spec.eigenvalues
    n = lam.size
    if eta is None:
        eta = 1.0 / math.sqrt(n)
    if not eta > 0:
        raise ValueError(f"bandwidth eta must be > 0, got {eta}")
    z = lam - 1j * eta
    g = np.mean(1.0 / (z[:, None] - lam[None, :]), axis=1)
    xi = lam / np.abs(1.0 - q + q * lam * g) ** 2
    mean_xi = float(np.mean(xi))
    if mean_xi > 0.0:
        xi = xi * (float(np.mean(lam)) / mean_xi)
    v = spec.vectors
    return (v * xi) @ v.T


@dataclass(frozen=True)
class QuadCoeffs:
    """Coefficients of the quadratic shrinkage a1 E^2 + a2 E + a3 I under the
    unit-trace constraint a1 tau(E^2) + a2 tau(E) + a3 = 1."""

    a1: float
    a2: float
    a3: float


def quadratic_coeffs(
    tau_e: float,
    tau_e2: float,
    tau_e3: float,
    tau_e4: float,
    tau_es: float,
    tau_e2s: float,
) -> QuadCoeffs:
    """Trace-constrained quadratic polynomial of E closest to Sigma in
    expected Frobenius norm.

    Inputs are the expected moments tau(E^m), m = 1..4, and the mixed
    moments tau_es = E[tau(E Sigma)], tau_e2s = E[tau(E^2 Sigma)], with the
    target normalized to tau(Sigma) = 1.  Eliminating a3 via the trace
    constraint leaves a 2x2 normal system in the centered moments; a
    singular system (for example E = identity) raises.
    """
    caa = tau_e4 - tau_e2 * tau_e2
    cbb = tau_e2 - tau_e * tau_e
    cab = tau_e3 - tau_e2 * tau_e
    cac = tau_e2s - tau_e2
    cbc = tau_es - tau_e
    det = caa * cbb - cab * cab
    if abs(det) <= 1e-12:
        raise DegenerateSystem(
            "quadratic shrinkage system is singular (degenerate moments)"
        )
    a1 = (cac * cbb - cbc * cab) / det
    a2 = (cbc * caa - cac * cab) / det
    a3 = 1.0 - a1 * tau_e2 - a2 * tau_e
    return QuadCoeffs(a1=float(a1), a2=float(a2), a3=float(a3))
