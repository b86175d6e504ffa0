"""Dense linear algebra helpers.

Matrices are plain 2-D ``numpy.float64`` arrays stored row-major, one
instance (or class) per row.
"""

import warnings

import numpy as np
import scipy.linalg

# Pivot magnitude, relative to the largest pivot, below which a system is
# treated as singular.
PIVOT_RTOL = 1e-12


class ShapeError(ValueError):
    pass


class SingularSystemError(np.linalg.LinAlgError):
    pass


def as_matrix(x, name="matrix", check_finite=True):
    """Coerce ``x`` to a C-contiguous float64 2-D array.

    1-D input is treated as a single row.
    """
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {m.shape}")
    if check_finite and not np.all(np.isfinite(m)):
        r, c = np.argwhere(~np.isfinite(m))[0]
        raise ValueError(f"{name} has non-finite entry {m[r, c]} at ({r}, {c})")
    return m


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def row_norms(m):
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def normalize_rows(m, eps=1e-12):
    """Scale every row to unit L2 norm.

    Rows whose norm is at most ``eps`` come back as zeros.

    >>> normalize_rows(np.array([[3.0, 4.0], [0.0, 0.0]]))
    array([[0.6, 0.8],
           [0. , 0. ]])
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = np.asarray(m, dtype=np.float64)
    norms = row_norms(m)
    out = m / np.maximum(norms, eps)[:, None]
    out[norms <= eps] = 0.0
    return out


def ridge_solve(gram, rhs, gamma=0.0):
    """Solve ``(gram + gamma * I) X = rhs`` by dense LU factorization.

    Raises SingularSystemError if the smallest pivot falls below
    ``PIVOT_RTOL`` times the largest one.
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    if gram.ndim != 2 or gram.shape[0] != gram.shape[1]:
        raise ShapeError(f"gram must be square, got {gram.shape}")
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    if rhs.shape[0] != gram.shape[0]:
        raise ShapeError(f"rhs {rhs.shape} does not match gram {gram.shape}")
    system = gram + gamma * np.eye(gram.shape[0])
    with warnings.catch_warnings():
        # singularity is reported below with our own tolerance
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(system, check_finite=True)
    pivots = np.abs(np.diag(lu))
    if pivots.size and (pivots.max() == 0 or pivots.min() < PIVOT_RTOL * pivots.max()):
        raise SingularSystemError(
            f"system of size {gram.shape[0]} is singular "
            f"(min pivot {pivots.min():.3e}, max pivot {pivots.max():.3e}, gamma={gamma})"
        )
    x = scipy.linalg.lu_solve((lu, piv), rhs)
    return x[:, 0] if vector_rhs else x
