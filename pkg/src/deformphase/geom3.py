"""Small fixed-size linear algebra on R^3, so(3) and SO(3).

Vectors are ``numpy`` arrays of shape ``(3,)``; rotations, skew matrices and
inertia tensors are arrays of shape ``(3, 3)``.  Everything here is a pure
function of its inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import Degenerate, NotPositiveDefinite, NotSkew

EPS_ANGLE = 1e-8


@dataclass(frozen=True)
class Tolerances:
    tol_orth: float = 1e-9
    tol_skew: float = 1e-10
    tol_lin: float = 1e-10


DEFAULT_TOLERANCES = Tolerances()


def as_vec3(v) -> np.ndarray:
    """Return ``v`` as a float array of shape (3,), rejecting non-finite input."""
    a = np.asarray(v, dtype=float).reshape(3)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"vector has non-finite components: {a}")
    return a


def hat(v) -> np.ndarray:
    """Skew matrix with ``hat(v) @ w == cross(v, w)``."""
    x, y, z = as_vec3(v)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S, tol_skew: float = DEFAULT_TOLERANCES.tol_skew) -> np.ndarray:
    """Inverse of :func:`hat`.

    Raises NotSkew when the symmetric part of ``S`` is larger than
    ``tol_skew`` (max-abs entry).
    """
    S = np.asarray(S, dtype=float)
    sym = 0.5 * (S + S.T)
    if np.max(np.abs(sym)) > tol_skew:
        raise NotSkew(f"matrix is not skew-symmetric (|sym| = {np.max(np.abs(sym)):.3e})")
    return np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]]) * 0.5


def exp_rotation(v) -> np.ndarray:
    """Rodrigues formula: rotation by ``|v|`` radians about ``v/|v|``."""
    v = as_vec3(v)
    theta2 = float(v @ v)
    theta = np.sqrt(theta2)
    K = hat(v)
    if theta < EPS_ANGLE:
        # second-order series of sin(x)/x and (1-cos x)/x^2
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
    else:
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * (K @ K)


def log_rotation(R) -> np.ndarray:
    """Rotation vector of ``R`` with angle in ``[0, pi]``."""
    R = np.asarray(R, dtype=float)
    cos_t = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    theta = float(np.arccos(cos_t))
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < EPS_ANGLE:
        return 0.5 * w
    if np.pi - theta < 1e-6:
        # sin(theta) ~ 0: read the axis off R + I = 2 n n^T (at theta = pi)
        B = R + np.eye(3)
        j = int(np.argmax(np.linalg.norm(B, axis=0)))
        n = B[:, j] / np.linalg.norm(B[:, j])
        if n @ w < 0.0:
            n = -n
        return theta * n
    return theta / (2.0 * np.sin(theta)) * w


def orthogonality_residual(R) -> float:
    """Frobenius norm of ``R^T R - I``."""
    R = np.asarray(R, dtype=float)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def check_rotation(R, tol_orth: float = DEFAULT_TOLERANCES.tol_orth) -> np.ndarray:
    R = np.asarray(R, dtype=float).reshape(3, 3)
    if orthogonality_residual(R) > tol_orth or abs(np.linalg.det(R) - 1.0) > tol_orth:
        raise Degenerate("matrix is not a rotation within tol_orth")
    return R


def project_to_rotation(M) -> np.ndarray:
    """Closest rotation to ``M`` in the Frobenius norm (orthogonal polar factor)."""
    M = np.asarray(M, dtype=float).reshape(3, 3)
    if not np.all(np.isfinite(M)):
        raise Degenerate("matrix has non-finite entries")
    U, s, Vt = np.linalg.svd(M)
    if s[-1] <= 1e-12 * max(s[0], 1e-300) or np.linalg.det(M) <= 0.0:
        raise Degenerate("cannot project a matrix with det <= 0 or deficient rank")
    return U @ Vt


def inertia_tensor(M, *, particle_derived: bool = False) -> np.ndarray:
    """Validate and symmetrize a 3x3 inertia tensor.

    The returned matrix is exactly symmetric.  Eigenvalues must be positive
    (NotPositiveDefinite otherwise).  The triangle inequality on principal
    moments is checked with a tolerance; violation is an error for
    particle-derived tensors and only a warning for synthetic ones.
    """
    M = np.asarray(M, dtype=float)
    if M.shape == (3,):
        M = np.diag(M)
    M = M.reshape(3, 3)
    if not np.all(np.isfinite(M)):
        raise NotPositiveDefinite("inertia tensor has non-finite entries")
    scale = max(np.max(np.abs(M)), 1e-300)
    if np.max(np.abs(M - M.T)) > 1e-12 * scale:
        raise NotPositiveDefinite("inertia tensor is not symmetric")
    S = 0.5 * (M + M.T)
    moments = np.linalg.eigvalsh(S)
    if moments[0] <= 0.0:
        raise NotPositiveDefinite(f"inertia tensor has eigenvalue {moments[0]:.3e} <= 0")
    if moments[0] + moments[1] < moments[2] * (1.0 - 1e-12):
        msg = f"principal moments {moments} violate I_i + I_j >= I_k"
        if particle_derived:
            raise NotPositiveDefinite(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return S


def apply_inverse(inertia, v) -> np.ndarray:
    """Solve ``inertia @ x = v`` by Cholesky factorization."""
    try:
        factor = cho_factor(np.asarray(inertia, dtype=float), lower=True, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NotPositiveDefinite(str(exc)) from exc
    return cho_solve(factor, np.asarray(v, dtype=float))
