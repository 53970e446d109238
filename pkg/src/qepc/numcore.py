"""Dense complex linear algebra primitives.

Thin, validated wrappers over LAPACK (through ``numpy.linalg``) with the
tolerance conventions used by the rest of the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotHermitianError, NotPSDError

DEFAULT_RTOL = 1e-10
HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10


def as_matrix(A) -> np.ndarray:
    """Return ``A`` as a finite 2-D complex array, raising ``ValueError`` otherwise."""
    M = np.asarray(A, dtype=complex)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def as_square(A) -> np.ndarray:
    M = as_matrix(A)
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return (A + A.conj().T) / 2


def hermitian_asymmetry(A: np.ndarray) -> float:
    """Largest entry of ``|A - A^dag|`` relative to ``max(1, max|A|)``."""
    if A.size == 0:
        return 0.0
    scale = max(1.0, float(np.max(np.abs(A))))
    return float(np.max(np.abs(A - A.conj().T))) / scale


def symmetrize(A, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate near-Hermiticity and return ``(A + A^dag) / 2``."""
    M = as_square(A)
    asym = hermitian_asymmetry(M)
    if asym > tol:
        raise NotHermitianError(f"matrix is not Hermitian (asymmetry {asym:.3e} > {tol:.1e})")
    return hermitian_part(M)


def eig_hermitian(A, tol: float = HERMITIAN_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray
        Real eigenvalues sorted in descending order.
    eigenvectors : ndarray
        Unitary matrix whose column ``k`` belongs to ``eigenvalues[k]``.
    """
    H = symmetrize(A, tol)
    w, V = np.linalg.eigh(H)
    return w[::-1].copy(), V[:, ::-1].copy()


@dataclass(frozen=True, eq=False)
class SvdFactorization:
    """``A = U diag(s) Vh`` with singular values in descending order."""

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray
    rank_cutoff: float = DEFAULT_RTOL

    @property
    def threshold(self) -> float:
        s = self.singular_values
        return self.rank_cutoff * float(s[0]) if s.size else 0.0

    @property
    def rank(self) -> int:
        s = self.singular_values
        if s.size == 0 or s[0] == 0.0:
            return 0
        return int(np.count_nonzero(s > self.threshold))

    @property
    def shape(self) -> tuple[int, int]:
        return self.left_vectors.shape[0], self.right_vectors.shape[1]

    def reconstruct(self) -> np.ndarray:
        k = self.singular_values.size
        return (self.left_vectors[:, :k] * self.singular_values) @ self.right_vectors[:k]

    def range_basis(self) -> np.ndarray:
        """Orthonormal columns spanning the column space (under the cutoff)."""
        return self.left_vectors[:, : self.rank]

    def kernel_basis(self) -> np.ndarray:
        """Orthonormal columns spanning the null space (under the cutoff)."""
        return self.right_vectors[self.rank :].conj().T


def svd(A, rtol: float = DEFAULT_RTOL) -> SvdFactorization:
    """Full singular value decomposition with a relative rank cutoff."""
    M = as_matrix(A)
    U, s, Vh = np.linalg.svd(M, full_matrices=True)
    return SvdFactorization(U, s, Vh, rtol)


def pinv_from_svd(f: SvdFactorization) -> np.ndarray:
    r = f.rank
    U = f.left_vectors[:, :r]
    Vh = f.right_vectors[:r]
    return (Vh.conj().T / f.singular_values[:r]) @ U.conj().T


def pinv(A, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse.

    Singular values at or below ``rtol * sigma_max`` are treated as zero.
    """
    if not 0.0 < rtol < 1.0:
        raise ValueError("rtol must lie in (0, 1)")
    return pinv_from_svd(svd(A, rtol))


@dataclass(frozen=True)
class PsdCheck:
    """Outcome of :func:`is_psd`; truthy iff the matrix is PSD within tolerance."""

    is_psd: bool
    min_eigenvalue: float

    def __bool__(self) -> bool:
        return self.is_psd


def is_psd(A, tol: float = PSD_TOL) -> PsdCheck:
    H = symmetrize(A, max(tol, HERMITIAN_TOL))
    lam_min = float(np.linalg.eigvalsh(H)[0]) if H.size else 0.0
    return PsdCheck(lam_min >= -tol, lam_min)


def sqrtm_psd(A, tol: float = PSD_TOL) -> np.ndarray:
    """Principal square root of a PSD matrix.

    Eigenvalues in ``[-tol, 0)`` are clipped to zero; anything more negative
    raises :class:`NotPSDError`.
    """
    H = symmetrize(A, HERMITIAN_TOL)
    w, V = np.linalg.eigh(H)
    if w.size and w[0] < -tol:
        raise NotPSDError(f"matrix has eigenvalue {w[0]:.3e} < -{tol:.1e}", float(w[0]))
    root = np.sqrt(np.clip(w, 0.0, None))
    return hermitian_part((V * root) @ V.conj().T)


def kron(A, B) -> np.ndarray:
    """Kronecker product, ``(A x B)[i*dB + k, j*dB + l] = A[i, j] * B[k, l]``."""
    return np.kron(as_matrix(A), as_matrix(B))
