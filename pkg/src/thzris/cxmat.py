"""Complex dense linear algebra kernels.

Matrices and vectors are plain ``numpy`` complex arrays. The helpers here add
the shape and finiteness checks the rest of the package relies on, plus the
two structured kernels used by the precoders: a Hermitian positive-definite
solve and an orthonormal null-space basis.
"""

import numpy as np
import scipy.linalg

from .errors import RejectedInputError, SingularityError

HERMITIAN_TOL = 1e-9
RANK_TOL = 1e-10


def as_cmatrix(a, name="matrix"):
    """Return ``a`` as a 2-D complex array, rejecting non-finite entries."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise RejectedInputError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} has non-finite entries")
    return arr


def as_cvector(v, name="vector"):
    """Return ``v`` as a 1-D complex array, rejecting non-finite entries."""
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1:
        raise RejectedInputError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise RejectedInputError(f"{name} has non-finite entries")
    return arr


def hermitian(a):
    """Conjugate transpose."""
    return np.conj(np.asarray(a)).T


def matmul(a, b):
    """Complex matrix product with an explicit dimension check."""
    a = as_cmatrix(a, "a")
    b = as_cmatrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise RejectedInputError(
            f"dimension mismatch: {a.shape} times {b.shape}")
    return a @ b


def fro_norm(a):
    return float(np.linalg.norm(np.asarray(a)))


def solve_hpd(a, b):
    """Solve ``a @ x = b`` for Hermitian positive-definite ``a``.

    Uses a Cholesky factorization; the inverse is never formed.

    Raises
    ------
    RejectedInputError
        If ``a`` is not square or departs from Hermitian symmetry by more
        than ``1e-9`` relative to its largest entry, or shapes disagree.
    SingularityError
        If the factorization breaks down (``a`` not positive definite).
    """
    a = as_cmatrix(a, "a")
    b = np.asarray(b, dtype=complex)
    n = a.shape[0]
    if a.shape[1] != n:
        raise RejectedInputError(f"solve_hpd needs a square matrix, got {a.shape}")
    if b.shape[0] != n or b.ndim not in (1, 2):
        raise RejectedInputError(f"right-hand side shape {b.shape} does not fit {a.shape}")
    if not np.all(np.isfinite(b)):
        raise RejectedInputError("right-hand side has non-finite entries")
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny) if n else 1.0
    if n and np.max(np.abs(a - hermitian(a))) > HERMITIAN_TOL * scale:
        raise RejectedInputError("matrix is not Hermitian")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise SingularityError(f"Cholesky breakdown: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def null_space_basis(a):
    """Orthonormal basis of the right null space of a wide matrix.

    The basis comes from a column-pivoted Householder QR of ``a^H``: the
    trailing columns of the full ``Q`` factor span the orthogonal complement
    of the row space. Rank is decided with the absolute threshold
    ``1e-10 * (largest column norm of a^H)``.

    Returns
    -------
    list of ndarray
        ``a.shape[1] - rank(a)`` unit vectors ``v`` with ``a @ v ~ 0``.
    """
    a = as_cmatrix(a, "a")
    rows, cols = a.shape
    if rows >= cols:
        raise RejectedInputError(
            f"null_space_basis expects rows < cols, got {a.shape}")
    if rows == 0:
        return [e for e in np.eye(cols, dtype=complex)]
    ah = hermitian(a)
    q, r, _ = scipy.linalg.qr(ah, mode="full", pivoting=True)
    largest = float(np.max(np.linalg.norm(ah, axis=0)))
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_TOL * largest)) if largest > 0 else 0
    return [q[:, j].copy() for j in range(rank, cols)]


def unit_modulus(z):
    """Project onto the unit circle; zero maps to ``1+0j``.

    Works elementwise on arrays and returns a Python complex for scalars.
    """
    out = np.exp(1j * np.angle(np.asarray(z, dtype=complex)))
    if out.ndim == 0:
        return complex(out)
    return out
