"""Dense symmetric matrix helpers: traces, eigendecomposition, square roots.

All matrices are plain numpy arrays; symmetry is validated where it matters.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefinite

# eigenvalues of sampled SPD matrices can dip slightly below zero from round-off
PSD_TOL = 1e-10


def check_symmetric(m, tol: float = 1e-8) -> np.ndarray:
    """Return m as a float array after checking it is square and symmetric."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0.0, atol=tol):
        raise ValueError("matrix is not symmetric")
    return m


@dataclass(frozen=True)
class SymmetricSpectrum:
    """Eigendecomposition of a symmetric matrix.

    eigenvalues are ascending; vectors holds orthonormal eigenvectors as
    columns, each flipped so its largest-magnitude entry is positive.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.eigenvalues) @ v.T


def normalized_trace(m) -> float:
    """tau(m) = Tr(m) / n."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return float(np.trace(m)) / m.shape[0]


def eigh(m) -> SymmetricSpectrum:
    """Symmetric eigendecomposition with a deterministic sign convention.

    Each eigenvector is flipped so that its largest-magnitude entry (the
    first one on ties) is positive; eigenvectors are sign-ambiguous and the
    fixed convention keeps downstream estimators reproducible.
    """
    m = check_symmetric(m)
    vals, vecs = np.linalg.eigh(m)
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[lead, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return SymmetricSpectrum(eigenvalues=vals, vectors=vecs * signs)


def spd_sqrt(m) -> np.ndarray:
    """Symmetric square root of a positive semi-definite matrix.

    Eigenvalues in [-1e-10, 0) are clipped to zero; anything below that
    tolerance raises NotPositiveSemidefinite.
    """
    spec = eigh(m)
    vals = spec.eigenvalues
    if vals[0] < -PSD_TOL:
        raise NotPositiveSemidefinite(
            f"matrix is not positive semi-definite (min eigenvalue {vals[0]:.3e})"
        )
    vals = np.clip(vals, 0.0, None)
    v = spec.vectors
    s = (v * np.sqrt(vals)) @ v.T
    return (s + s.T) / 2.0


def frobenius_error(a, b) -> float:
    """tau((a - b)^2): squared Frobenius norm of the difference over n."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    d = a - b
    return float(np.sum(d * d)) / a.shape[0]
