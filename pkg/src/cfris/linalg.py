"""Dense complex linear-algebra kernels shared by every solver module.

Conventions used throughout the package:

* matrices are 2-D complex128 numpy arrays, row-major;
* the real inner product is <A, B> = Re tr(A^H B), so the first-order
  expansion of a real objective reads f(X + dX) ~ f(X) + 2 Re tr(G^H dX)
  for gradient G;
* Hermitian positive-definite systems are solved through a Cholesky
  factorization, never through an explicit inverse or determinant.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg import lapack

from .errors import SingularMatrixError, ValidationError

# Structural validations are checked at 1e-10, iterative/numerical
# agreements at 1e-9 (double precision leaves ample headroom).
HERMITIAN_RTOL = 1e-10
UNITARY_TOL = 1e-10

_LN2 = np.log(2.0)


def as_cmatrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce ``a`` to a finite 2-D complex128 array, validating shape."""
    out = np.asarray(a, dtype=np.complex128)
    if out.ndim != 2 or out.shape[0] < 1 or out.shape[1] < 1:
        raise ValidationError(f"{name}: expected a 2-D matrix, got shape {out.shape}")
    if not np.all(np.isfinite(out)):
        raise ValidationError(f"{name}: contains non-finite entries")
    return out


def herm(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return a.conj().T


def hermitian_deviation(a: np.ndarray) -> float:
    """Relative Frobenius deviation of ``a`` from its conjugate transpose."""
    scale = max(np.linalg.norm(a), 1.0)
    return float(np.linalg.norm(a - herm(a)) / scale)


def _ensure_hermitian(a: np.ndarray, name: str) -> None:
    dev = hermitian_deviation(a)
    if dev > HERMITIAN_RTOL:
        raise ValidationError(f"{name}: not Hermitian (relative deviation {dev:.3e})")


def _cholesky_lower(a: np.ndarray, name: str) -> np.ndarray:
    c, info = lapack.zpotrf(a, lower=1)
    if info > 0:
        raise SingularMatrixError(
            f"{name}: not positive definite, leading minor of order {info} "
            "failed to factorize"
        )
    if info < 0:
        raise ValidationError(f"{name}: illegal value in argument {-info} of zpotrf")
    return c


def hermitian_solve(a, b) -> np.ndarray:
    """Solve A X = B for Hermitian positive-definite A via Cholesky.

    The residual satisfies ||A X - B||_F <= ~1e-10 ||B||_F for
    well-conditioned systems.
    """
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"A must be square, got shape {a.shape}")
    if a.shape[0] != b.shape[0]:
        raise ValidationError(f"incompatible shapes A {a.shape}, B {b.shape}")
    _ensure_hermitian(a, "A")
    c = _cholesky_lower(a, "A")
    return cho_solve((c, True), b)


def fast_hpd_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Unvalidated Cholesky solve for hot loops; ``a`` must already be
    Hermitian positive definite."""
    _, x, info = lapack.zposv(a, b, lower=1)
    if info > 0:
        raise SingularMatrixError(
            f"not positive definite, leading minor of order {info} failed to factorize"
        )
    return x


def logdet2_hpd(a) -> float:
    """log2 det(A) for Hermitian positive-definite A, via Cholesky."""
    a = as_cmatrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"A must be square, got shape {a.shape}")
    _ensure_hermitian(a, "A")
    c = _cholesky_lower(a, "A")
    return float(2.0 * np.sum(np.log2(np.real(np.diag(c)))))


def unitary_deviation(u: np.ndarray) -> float:
    """Frobenius deviation of U^H U from the identity."""
    n = u.shape[1]
    return float(np.linalg.norm(herm(u) @ u - np.eye(n)))


def takagi_from_unitary(u) -> np.ndarray:
    """Map a unitary factor U to the symmetric unitary matrix U U^T."""
    u = as_cmatrix(u, "U")
    if u.shape[0] != u.shape[1]:
        raise ValidationError(f"U must be square, got shape {u.shape}")
    dev = unitary_deviation(u)
    if dev > UNITARY_TOL:
        raise ValidationError(f"U not unitary (||U^H U - I||_F = {dev:.3e})")
    return u @ u.T


def directional_derivative(f, x: np.ndarray, d: np.ndarray, h: float) -> float:
    """Central finite difference (f(X + hD) - f(X - hD)) / (2h)."""
    if h <= 0:
        raise ValidationError(f"step h must be positive, got {h}")
    fp = f(x + h * d)
    fm = f(x - h * d)
    if not (np.isfinite(fp) and np.isfinite(fm)):
        raise ValidationError("objective evaluated to a non-finite value")
    return (fp - fm) / (2.0 * h)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary: QR of a Gaussian matrix with phase-fixed diagonal."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))[np.newaxis, :]


def qr_retract(x: np.ndarray) -> np.ndarray:
    """Re-unitarize a square matrix through its QR factor (phase-fixed)."""
    q, r = np.linalg.qr(x)
    d = np.diag(r)
    phases = np.where(np.abs(d) > 0, d / np.abs(np.where(np.abs(d) > 0, d, 1.0)), 1.0)
    return q * phases[np.newaxis, :]


def real_inner(a: np.ndarray, b: np.ndarray) -> float:
    """Real inner product Re tr(A^H B)."""
    return float(np.real(np.sum(a.conj() * b)))
