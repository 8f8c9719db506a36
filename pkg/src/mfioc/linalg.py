"""Dense real matrix utilities shared by every other module.

Vectorization is column-major throughout: ``vectorize(A @ X @ B) ==
kron(B.T, A) @ vectorize(X)`` holds in its standard form. All operations
are pure functions; none keep global state.
"""

import numpy as np
import scipy.linalg

from .errors import NumericalBreakdownError, UsageError

__all__ = [
    "vectorize",
    "unvectorize",
    "commutation_matrix",
    "kron",
    "sym",
    "psd_project",
    "psd_floor",
    "pinv",
    "max_eig_sym",
    "min_eig_sym",
    "expm",
    "require_finite",
]


def require_finite(arr, name="array"):
    """Validate that an array is float and entirely finite.

    Returns the validated ndarray; raises :class:`UsageError` on NaN/Inf
    so they never enter a solver path.
    """
    out = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(out)):
        raise UsageError(f"{name} contains non-finite entries")
    return out


def vectorize(m):
    """Stack the columns of ``m`` into a single vector (column-major)."""
    return np.asarray(m, dtype=float).ravel(order="F")


def unvectorize(v, rows, cols):
    """Inverse of :func:`vectorize` for a ``rows x cols`` matrix."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise UsageError(f"cannot reshape length-{v.size} vector to {rows}x{cols}")
    return v.reshape((rows, cols), order="F")


def commutation_matrix(n):
    """Permutation matrix Y with ``Y @ vectorize(Z) == vectorize(Z.T)``.

    Y is involutory (``Y @ Y == I``) for square Z of size ``n``.
    """
    if n < 1:
        raise UsageError("commutation_matrix requires n >= 1")
    y = np.zeros((n * n, n * n))
    rows = np.arange(n).repeat(n)      # row index r of Z entry, vec index r + c*n
    cols = np.tile(np.arange(n), n)
    y[cols * n + rows, rows * n + cols] = 1.0
    return y


def kron(a, b):
    """Kronecker product (thin alias kept for a uniform call surface)."""
    return np.kron(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def sym(s):
    """Symmetric part ``(S + S.T) / 2``."""
    s = np.asarray(s, dtype=float)
    return 0.5 * (s + s.T)


def _eigh(s):
    try:
        return np.linalg.eigh(sym(s))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NumericalBreakdownError(f"eigendecomposition failed: {exc}") from exc


def psd_project(s):
    """Frobenius-nearest symmetric PSD matrix to ``sym(s)``.

    Symmetrizes, clamps negative eigenvalues to zero, and recomposes.
    Idempotent, and the output's minimum eigenvalue is >= -1e-10.
    """
    w, v = _eigh(s)
    return sym((v * np.maximum(w, 0.0)) @ v.T)


def psd_floor(s, floor):
    """Like :func:`psd_project` but clamps eigenvalues to ``floor``."""
    w, v = _eigh(s)
    return sym((v * np.maximum(w, floor)) @ v.T)


def pinv(m, rtol=1e-12):
    """Moore-Penrose pseudoinverse via SVD.

    Singular values below ``rtol`` times the largest are treated as zero.
    ``rtol`` must be positive; the default matches the rank cutoff used
    when inverting the (singular by construction) normal matrix of the
    constraint system.
    """
    if rtol <= 0:
        raise UsageError("pinv rtol must be positive")
    m = np.asarray(m, dtype=float)
    try:
        return np.linalg.pinv(m, rcond=rtol)
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdownError(f"SVD did not converge: {exc}") from exc


def max_eig_sym(s):
    """Largest eigenvalue of the symmetric part of ``s``."""
    return float(_eigh(s)[0][-1])


def min_eig_sym(s):
    """Smallest eigenvalue of the symmetric part of ``s``."""
    return float(_eigh(s)[0][0])


def expm(m):
    """Matrix exponential (scaling-and-squaring Pade, via SciPy)."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError("expm requires a square matrix")
    out = scipy.linalg.expm(m)
    if not np.all(np.isfinite(out)):
        raise NumericalBreakdownError("matrix exponential overflowed")
    return out
