"""SO(3) primitives: hat/vee isomorphism, exponential map, polar projection,
and the invariant-metric covariant derivatives used by the dynamics and the
split PID controller.

All rotations are plain (3, 3) numpy arrays, all vectors plain (3,) arrays.
The covariant-derivative convention: the caller supplies the ordinary
derivative of the field along the flow (``deta``), so the same routine serves
trajectories (deta = time derivative) and constant fields (deta = 0).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import Degenerate, NotSkew

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])

SKEW_TOL = 1e-9
ROTATION_TOL = 1e-9
SMALL_ANGLE = 1e-8


def hat(v):
    """Map a 3-vector to the skew matrix with hat(v) @ y == cross(v, y)."""
    v = np.asarray(v, dtype=float)
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def vee(M, tol=SKEW_TOL):
    """Inverse of hat(). The symmetric part of ``M`` must be below ``tol``
    (Frobenius); it is stripped, not folded into the result.
    """
    M = np.asarray(M, dtype=float)
    sym = M + M.T
    if np.linalg.norm(sym) >= tol:
        raise NotSkew(f"symmetric part has norm {np.linalg.norm(sym):.3e} >= {tol:.1e}")
    A = 0.5 * (M - M.T)
    return np.array([A[2, 1], A[0, 2], A[1, 0]])


def exp_so3(v):
    """Rodrigues exponential of a rotation vector.

    Below ``SMALL_ANGLE`` the second-order series is used to avoid 0/0 in the
    Rodrigues coefficients at double precision.
    """
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v)
    K = hat(v)
    if theta < SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * (K @ K)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * K + b * (K @ K)


def rotation_angle(R):
    """Rotation angle of R from the trace identity, clipped for roundoff."""
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def log_so3(R):
    """Rotation vector of R (principal branch, angle in [0, pi])."""
    theta = rotation_angle(R)
    if theta < SMALL_ANGLE:
        A = 0.5 * (R - R.T)
        return np.array([A[2, 1], A[0, 2], A[1, 0]])
    if theta > np.pi - 1e-7:
        # near pi the antisymmetric part degenerates; use the symmetric form
        S = 0.5 * (R + R.T)
        axis_sq = np.clip((np.diag(S) - np.cos(theta)) / (1.0 - np.cos(theta)), 0.0, None)
        axis = np.sqrt(axis_sq)
        # fix signs from the off-diagonal antisymmetric residue
        A = 0.5 * (R - R.T)
        w = np.array([A[2, 1], A[0, 2], A[1, 0]])
        signs = np.where(w >= 0, 1.0, -1.0)
        i = int(np.argmax(axis))
        axis = axis * signs if np.any(w) else axis
        if axis[i] < 0:
            axis = -axis
        return theta * axis / max(np.linalg.norm(axis), 1e-300)
    A = 0.5 * (R - R.T)
    w = np.array([A[2, 1], A[0, 2], A[1, 0]])
    return theta / np.sin(theta) * w


def dexpinv_so3(u, v):
    """Inverse right-trivialized differential of exp at u, applied to v.

    Closed form ``v - u x v / 2 + c2(theta) u x (u x v)`` with
    ``c2 = (1 - (theta/2) cot(theta/2)) / theta^2``; series below the
    small-angle threshold. Needed by the Lie-group Runge-Kutta stages.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    theta2 = float(u @ u)
    uxv = np.cross(u, v)
    uxuxv = np.cross(u, uxv)
    if theta2 < SMALL_ANGLE**2:
        c2 = 1.0 / 12.0 + theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        half = 0.5 * theta
        c2 = (1.0 - half * np.cos(half) / np.sin(half)) / theta2
    return v - 0.5 * uxv + c2 * uxuxv


def project_so3(M, tol=1e-9):
    """Nearest rotation to M in the Frobenius norm (polar decomposition).

    Raises Degenerate for reflections (det <= 0) and for matrices with a
    singular value below ``tol``.
    """
    M = np.asarray(M, dtype=float)
    if np.linalg.det(M) <= 0.0:
        raise Degenerate("matrix is orientation-reversing or rank-deficient")
    U, s, Vt = np.linalg.svd(M)
    if np.min(s) < tol:
        raise Degenerate(f"smallest singular value {np.min(s):.3e} < {tol:.1e}")
    R = U @ Vt
    if np.linalg.det(R) < 0:  # unreachable when det(M) > 0, kept as a guard
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return R


def is_rotation(R, tol=ROTATION_TOL):
    R = np.asarray(R, dtype=float)
    return (np.linalg.norm(R.T @ R - np.eye(3)) < tol) and (abs(np.linalg.det(R) - 1.0) < tol)


def orthonormality_drift(R):
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


class Invariance(Enum):
    LEFT = "left"
    RIGHT = "right"
    BI = "bi"


class Frame(Enum):
    BODY = "body"
    SPATIAL = "spatial"


@dataclass(frozen=True)
class ConnectionKind:
    """Which invariant metric induces the connection, and in which frame the
    velocity arguments are expressed. The frame selects the sign of the
    structure-constant term: '+' for body, '-' for spatial angular velocities.
    """

    invariance: Invariance
    frame: Frame

    @property
    def sign(self):
        return 1.0 if self.frame is Frame.BODY else -1.0


LEFT_BODY = ConnectionKind(Invariance.LEFT, Frame.BODY)
LEFT_SPATIAL = ConnectionKind(Invariance.LEFT, Frame.SPATIAL)
RIGHT_BODY = ConnectionKind(Invariance.RIGHT, Frame.BODY)
RIGHT_SPATIAL = ConnectionKind(Invariance.RIGHT, Frame.SPATIAL)
BI_BODY = ConnectionKind(Invariance.BI, Frame.BODY)
BI_SPATIAL = ConnectionKind(Invariance.BI, Frame.SPATIAL)


def covariant_derivative(kind, inertia, xi, eta, deta):
    """Momentum form of the covariant derivative of ``eta`` along ``xi``.

    For the left/right-invariant kinds returns ``I * nabla_xi eta``; for the
    bi-invariant kind returns ``nabla_xi eta`` itself (``inertia`` ignored).
    ``deta`` is the ordinary derivative of eta along the flow.

    Left-invariant:  I deta + (s I(xi x eta) - (I eta x xi + I xi x eta)) / 2
    Right-invariant: I deta + (s I(xi x eta) + (I eta x xi + I xi x eta)) / 2
    Bi-invariant:    deta + s (xi x eta) / 2
    with s = +1 for body-frame velocities, -1 for spatial.
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    deta = np.asarray(deta, dtype=float)
    s = kind.sign
    if kind.invariance is Invariance.BI:
        return deta + 0.5 * s * np.cross(xi, eta)
    inertia = np.asarray(inertia, dtype=float)
    bracket = s * (inertia @ np.cross(xi, eta))
    momenta = np.cross(inertia @ eta, xi) + np.cross(inertia @ xi, eta)
    if kind.invariance is Invariance.LEFT:
        return inertia @ deta + 0.5 * (bracket - momenta)
    return inertia @ deta + 0.5 * (bracket + momenta)


def euler_momentum_form(inertia_spatial, omega, omega_dot):
    """Spatial-frame Euler expression I^R wdot - (I^R w) x w, i.e. the
    left-invariant covariant derivative along the trajectory itself.
    """
    inertia_spatial = np.asarray(inertia_spatial, dtype=float)
    omega = np.asarray(omega, dtype=float)
    return inertia_spatial @ omega_dot - np.cross(inertia_spatial @ omega, omega)
