"""Regularized pseudo-inversion kernels for dense real matrices.

Everything in this module operates on plain 2-D float64 ``numpy`` arrays.
Inputs are validated to be finite on entry; factorizations are pure
functions of their inputs, so results are deterministic and safe to share
across threads.

Three routes to a (regularized) Moore-Penrose pseudo-inverse are provided:

* truncated SVD (:func:`tsvd_factorize` / :func:`tsvd_pinv_apply`),
* Tikhonov regularization in filtered-SVD form (:func:`tikhonov_solve`),
* complete orthogonal decomposition built from column-pivoted QR
  (:func:`cod_factorize` / :func:`cod_pinv_apply`), which inverts an
  ill-conditioned matrix through orthogonal transforms and one triangular
  back substitution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "TruncatedSVDFactors",
    "CODFactors",
    "auto_tolerance",
    "tsvd_factorize",
    "tsvd_pinv_apply",
    "tikhonov_solve",
    "cod_factorize",
    "cod_pinv_apply",
    "dump_factors",
]

_EPS = float(np.finfo(np.float64).eps)


def _as_matrix(a, name: str = "matrix") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def auto_tolerance(shape: tuple[int, int], sigma_max: float) -> float:
    """Default rank cutoff ``max(rows, cols) * eps * sigma_max``."""
    return max(shape) * _EPS * sigma_max


def _resolve_tol(tol, shape, sigma_max) -> float:
    if tol is None:
        return auto_tolerance(shape, sigma_max)
    tol = float(tol)
    if tol <= 0.0:
        raise ValueError(f"tolerance must be positive or None (auto), got {tol}")
    return tol


@dataclass(frozen=True)
class TruncatedSVDFactors:
    """Rank-truncated SVD ``A ~= left @ diag(singular_values) @ right.T``.

    ``left_vectors`` is (rows, r) and ``right_vectors`` is (cols, r), both
    with orthonormal columns; ``singular_values`` holds the r retained
    values, all strictly above ``rank_tolerance`` and non-increasing.
    """

    left_vectors: np.ndarray
    singular_values: np.ndarray
    right_vectors: np.ndarray
    rank_tolerance: float

    @property
    def rank(self) -> int:
        return int(self.singular_values.size)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left_vectors.shape[0], self.right_vectors.shape[0])

    def reconstruct(self) -> np.ndarray:
        """Dense ``left @ diag(s) @ right.T`` (zeros for rank 0)."""
        return (self.left_vectors * self.singular_values) @ self.right_vectors.T


@dataclass(frozen=True)
class CODFactors:
    """Complete orthogonal decomposition of a dense matrix.

    With ``perm = permutation`` the factors satisfy
    ``A[:, perm] ~= left_orthogonal @ middle_triangular @ right_orthogonal``
    where ``left_orthogonal`` is (rows, r) with orthonormal columns,
    ``middle_triangular`` is the r-by-r nonsingular lower-triangular core,
    and ``right_orthogonal`` is (r, cols) with orthonormal rows.
    """

    permutation: np.ndarray
    left_orthogonal: np.ndarray
    middle_triangular: np.ndarray
    right_orthogonal: np.ndarray
    numerical_rank: int
    rank_tolerance: float

    @property
    def shape(self) -> tuple[int, int]:
        return (self.left_orthogonal.shape[0], self.right_orthogonal.shape[1])

    def reconstruct(self) -> np.ndarray:
        """Dense matrix with the permutation folded back in."""
        rows, cols = self.shape
        out = np.zeros((rows, cols))
        if self.numerical_rank:
            core = self.left_orthogonal @ self.middle_triangular @ self.right_orthogonal
            out[:, self.permutation] = core
        return out


def tsvd_factorize(a, tol=None) -> TruncatedSVDFactors:
    """Truncated SVD keeping exactly the singular values above ``tol``.

    Parameters
    ----------
    a : array_like, shape (rows, cols)
        Finite dense matrix.
    tol : float, optional
        Rank cutoff. ``None`` selects :func:`auto_tolerance`.

    Returns
    -------
    TruncatedSVDFactors
        An all-zero matrix yields rank-0 factors, not an error.
    """
    a = _as_matrix(a, "A")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    sigma_max = float(s[0]) if s.size else 0.0
    tol = _resolve_tol(tol, a.shape, sigma_max)
    r = int(np.count_nonzero(s > tol))
    return TruncatedSVDFactors(
        left_vectors=np.ascontiguousarray(u[:, :r]),
        singular_values=s[:r].copy(),
        right_vectors=np.ascontiguousarray(vt[:r].T),
        rank_tolerance=tol,
    )


def _check_pinv_shapes(factors, b: np.ndarray, side: str) -> None:
    rows, cols = factors.shape
    if side == "left":
        if b.shape[0] != rows:
            raise ValueError(
                f"left pseudo-inverse apply needs B with {rows} rows to match "
                f"factors of shape {(rows, cols)}, got B of shape {b.shape}"
            )
    elif side == "right":
        if b.shape[1] != cols:
            raise ValueError(
                f"right pseudo-inverse apply needs B with {cols} columns to match "
                f"factors of shape {(rows, cols)}, got B of shape {b.shape}"
            )
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def tsvd_pinv_apply(factors: TruncatedSVDFactors, b, side: str = "left") -> np.ndarray:
    """Apply the truncated pseudo-inverse: ``A+ @ B`` (left) or ``B @ A+`` (right).

    Only the retained singular triplets contribute; rank-0 factors return
    the least-norm solution of an all-zero system, i.e. zeros.
    """
    b = _as_matrix(b, "B")
    _check_pinv_shapes(factors, b, side)
    rows, cols = factors.shape
    if factors.rank == 0:
        shape = (cols, b.shape[1]) if side == "left" else (b.shape[0], rows)
        return np.zeros(shape)
    u, s, v = factors.left_vectors, factors.singular_values, factors.right_vectors
    if side == "left":
        return v @ ((u.T @ b) / s[:, None])
    return ((b @ v) / s[None, :]) @ u.T


def tikhonov_solve(psi, y, lam: float) -> np.ndarray:
    """Solve ``min_W ||W Psi - Y||^2`` with Tikhonov regularization.

    Parameters
    ----------
    psi : array_like, shape (N, m)
        Feature matrix (features in rows, samples in columns).
    y : array_like, shape (k, m)
        Targets, one row per output component.
    lam : float
        Regularization weight, >= 0.

    Returns
    -------
    ndarray, shape (k, N)
        ``W = Y Psi^T (Psi Psi^T + reg)^-1`` evaluated through the SVD of
        ``Psi`` with filter factors ``sigma^2 / (sigma^2 + lam^2)``. Note the
        squared ``lam`` in the filter: for ``lam != 1`` this differs from the
        ``sigma^2 / (sigma^2 + lam)`` convention. ``lam = 0`` reduces to the
        plain truncated pseudo-inverse solution at the auto tolerance.
    """
    psi = _as_matrix(psi, "Psi")
    y = _as_matrix(y, "Y")
    if lam < 0:
        raise ValueError(f"regularization weight must be >= 0, got {lam}")
    if y.shape[1] != psi.shape[1]:
        raise ValueError(
            f"Psi of shape {psi.shape} and Y of shape {y.shape} must share the sample axis"
        )
    u, s, vt = np.linalg.svd(psi, full_matrices=False)
    if lam == 0.0:
        cutoff = auto_tolerance(psi.shape, float(s[0]) if s.size else 0.0)
        mask = s > cutoff
        coeff = np.zeros_like(s)
        coeff[mask] = 1.0 / s[mask]
    else:
        coeff = s / (s * s + lam * lam)
    return ((y @ vt.T) * coeff) @ u.T


def cod_factorize(a, tol=None) -> CODFactors:
    """Complete orthogonal decomposition with numerical rank detection.

    A column-pivoted QR of ``A`` fixes the numerical rank r (pivot
    magnitudes above ``tol``); a second pivoted factorization of the kept
    trapezoidal block compresses it to the nonsingular triangular core.
    """
    a = _as_matrix(a, "A")
    rows, cols = a.shape
    q, r_mat, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    sigma_max = float(diag[0]) if diag.size else 0.0
    tol = _resolve_tol(tol, a.shape, sigma_max)
    keep = diag > tol
    rank = int(diag.size if keep.all() else keep.argmin())
    if rank == 0:
        return CODFactors(
            permutation=perm,
            left_orthogonal=np.zeros((rows, 0)),
            middle_triangular=np.zeros((0, 0)),
            right_orthogonal=np.zeros((0, cols)),
            numerical_rank=0,
            rank_tolerance=tol,
        )
    # Compress the kept trapezoid R1 (r x cols) from the right:
    # R1.T[:, perm2] = Z @ Rz  =>  R1 = P2 Rz.T Z.T, with P2 folded into Q.
    r1 = r_mat[:rank, :]
    z, rz, perm2 = scipy.linalg.qr(r1.T, mode="economic", pivoting=True)
    left = np.ascontiguousarray(q[:, :rank][:, perm2])
    return CODFactors(
        permutation=perm,
        left_orthogonal=left,
        middle_triangular=np.ascontiguousarray(rz.T),
        right_orthogonal=np.ascontiguousarray(z.T),
        numerical_rank=rank,
        rank_tolerance=tol,
    )


def cod_pinv_apply(factors: CODFactors, b, side: str = "left") -> np.ndarray:
    """Apply the COD pseudo-inverse: ``A+ @ B`` (left) or ``B @ A+`` (right).

    The action is two orthogonal products and one triangular back
    substitution on the core; it agrees with the truncated-SVD route on the
    same numerical rank.
    """
    b = _as_matrix(b, "B")
    _check_pinv_shapes(factors, b, side)
    rows, cols = factors.shape
    if factors.numerical_rank == 0:
        shape = (cols, b.shape[1]) if side == "left" else (b.shape[0], rows)
        return np.zeros(shape)
    left, t11, right = factors.left_orthogonal, factors.middle_triangular, factors.right_orthogonal
    perm = factors.permutation
    if side == "left":
        core = scipy.linalg.solve_triangular(t11, left.T @ b, lower=True)
        out = np.empty((cols, b.shape[1]))
        out[perm] = right.T @ core
        return out
    core = scipy.linalg.solve_triangular(t11, (b[:, perm] @ right.T).T, lower=True, trans="T")
    return core.T @ left.T


def dump_factors(factors, path) -> None:
    """Write a small human-readable diagnostic dump of a factorization."""
    lines = []
    if isinstance(factors, TruncatedSVDFactors):
        lines.append("kind: tsvd")
        lines.append(f"shape: {factors.shape[0]} {factors.shape[1]}")
        lines.append(f"rank: {factors.rank}")
        lines.append(f"rank_tolerance: {factors.rank_tolerance!r}")
        lines.append("singular_values: " + " ".join(repr(v) for v in factors.singular_values))
    elif isinstance(factors, CODFactors):
        lines.append("kind: cod")
        lines.append(f"shape: {factors.shape[0]} {factors.shape[1]}")
        lines.append(f"rank: {factors.numerical_rank}")
        lines.append(f"rank_tolerance: {factors.rank_tolerance!r}")
        diag = np.diag(factors.middle_triangular)
        lines.append("core_diagonal: " + " ".join(repr(v) for v in diag))
        lines.append("permutation: " + " ".join(str(int(p)) for p in factors.permutation))
    else:
        raise TypeError(f"unsupported factor type {type(factors).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
