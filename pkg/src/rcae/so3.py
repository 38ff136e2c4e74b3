"""Rotation-group primitives on SO(3).

Conventions
-----------
An orientation matrix ``O`` (``O_B/A``) resolves coordinates of a vector in
frame A into frame B: ``x_B = O @ x_A``. It is the transpose of the matrix
that actively rotates A's basis onto B's.

Kinematics follow Poisson's equation ``dO/dt = -cross(w) O`` with ``w`` the
body-frame angular velocity, so one step of constant rate is
``O(t + dt) = exp_so3(-w * dt) @ O(t)``.

Quaternions are ``[eta, e1, e2, e3]`` (scalar first) with
``O = I - 2 eta cross(eps) + 2 cross(eps)^2``. A rotation of ``angle`` about
``axis`` in the ``exp_so3`` sense has ``eta = cos(angle/2)`` and
``eps = -sin(angle/2) * axis``.

Euler angles are aerospace 3-2-1 (yaw ``psi``, pitch ``theta``, roll ``phi``)
with ``O = O1(phi) @ O2(theta) @ O3(psi)``, each ``Oi`` the elementary
coordinate transformation about axis ``i``.

All angles are radians.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DegenerateError, NotSkewError

SMALL_ANGLE = 1e-6
AXIS_DEGENERATE_ANGLE = 1e-7
NEAR_PI_MARGIN = 1e-4
ORTHO_TOL = 1e-9
PROJECT_TOL = 1e-3
GIMBAL_TOL = 1e-9

_I3 = np.eye(3)


class AxisAngle(NamedTuple):
    """Angle in ``[0, pi]`` and unit eigenaxis.

    ``degenerate`` is set when the angle is below ``1e-7`` rad; the axis is then
    the convention vector ``(0, 0, 1)``. ``near_pi`` is set when the axis was
    recovered from the symmetric part of the matrix.
    """

    angle: float
    axis: np.ndarray
    degenerate: bool = False
    near_pi: bool = False


class Euler321(NamedTuple):
    psi: float
    theta: float
    phi: float
    gimbal_lock: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.psi, self.theta, self.phi])

    def degrees(self) -> np.ndarray:
        return np.degrees(self.as_array())


def wrap_angle(x):
    """Wrap angle(s) into ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(x, dtype=float), 2.0 * np.pi)


def wrap_scalar(x: float) -> float:
    """Scalar :func:`wrap_angle`."""
    y = math.pi - math.fmod(math.pi - x, 2.0 * math.pi)
    if y > math.pi:
        y -= 2.0 * math.pi
    elif y <= -math.pi:
        y += 2.0 * math.pi
    return y


def cross3(a, b) -> np.ndarray:
    """``a x b`` for two 3-vectors, without the overhead of :func:`numpy.cross`."""
    a0, a1, a2 = a[0], a[1], a[2]
    b0, b1, b2 = b[0], b[1], b[2]
    return np.array((a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0))


def cross_matrix(v) -> np.ndarray:
    """Skew-symmetric matrix ``cross(v)`` with ``cross(v) @ w == v x w``.

    Accepts a single 3-vector or a stack of shape ``(..., 3)``.
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def uncross(M) -> np.ndarray:
    """Inverse of :func:`cross_matrix`.

    Raises
    ------
    NotSkewError
        If ``||M + M^T||_F > 1e-6 ||M||_F``.
    """
    M = np.asarray(M, dtype=float)
    sym = np.linalg.norm(M + M.T)
    if sym > 1e-6 * np.linalg.norm(M):
        raise NotSkewError(f"matrix is not skew-symmetric (||M + M^T|| = {sym:.3e})")
    return 0.5 * np.array([M[2, 1] - M[1, 2], M[0, 2] - M[2, 0], M[1, 0] - M[0, 1]])


def _vee_antisym(O: np.ndarray) -> np.ndarray:
    # vee(O - O^T), no skew check
    return np.array([O[2, 1] - O[1, 2], O[0, 2] - O[2, 0], O[1, 0] - O[0, 1]])


def exp_so3(v) -> np.ndarray:
    """Matrix exponential ``exp(cross(v))`` by the Rodrigues formula.

    ``v`` may be a single rotation vector or a stack of shape ``(..., 3)``.
    Below ``1e-6`` rad the second-order series is used.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        x, y, z = v
        t2 = x * x + y * y + z * z
        t = math.sqrt(t2)
        if t < SMALL_ANGLE:
            a, b = 1.0, 0.5
        else:
            a = math.sin(t) / t
            b = (1.0 - math.cos(t)) / t2
        # I + a K + b K^2 with K^2 = v v^T - t2 I
        return np.array(
            [
                [1.0 + b * (x * x - t2), -a * z + b * x * y, a * y + b * x * z],
                [a * z + b * x * y, 1.0 + b * (y * y - t2), -a * x + b * y * z],
                [-a * y + b * x * z, a * x + b * y * z, 1.0 + b * (z * z - t2)],
            ]
        )
    t = np.linalg.norm(v, axis=-1)
    small = t < SMALL_ANGLE
    ts = np.where(small, 1.0, t)
    a = np.where(small, 1.0, np.sin(ts) / ts)
    b = np.where(small, 0.5, (1.0 - np.cos(ts)) / ts**2)
    K = cross_matrix(v)
    return _I3 + a[..., None, None] * K + b[..., None, None] * (K @ K)


def axis_angle(O) -> AxisAngle:
    """Angle and eigenaxis of a rotation, inverse of :func:`exp_so3`."""
    O = np.asarray(O, dtype=float)
    w = _vee_antisym(O)  # 2 sin(angle) axis
    s = 0.5 * math.sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2])
    c = 0.5 * (O[0, 0] + O[1, 1] + O[2, 2] - 1.0)
    angle = math.atan2(s, c)
    if angle < AXIS_DEGENERATE_ANGLE:
        return AxisAngle(angle, np.array([0.0, 0.0, 1.0]), degenerate=True)
    if angle > math.pi - NEAR_PI_MARGIN:
        # symmetric part is cos(a) I + (1 - cos(a)) n n^T
        nn = (0.5 * (O + O.T) - c * _I3) / (1.0 - c)
        i = int(np.argmax(np.diag(nn)))
        axis = nn[:, i] / math.sqrt(nn[i, i])
        axis /= np.linalg.norm(axis)
        if axis @ w < 0.0:
            axis = -axis
        return AxisAngle(angle, axis, near_pi=True)
    return AxisAngle(angle, w / (2.0 * s))


def log_so3(O) -> np.ndarray:
    """Rotation vector ``angle * axis`` of ``O``."""
    aa = axis_angle(O)
    if aa.degenerate:
        # first order: O - O^T ~ 2 cross(v)
        return 0.5 * _vee_antisym(np.asarray(O, dtype=float))
    return aa.angle * aa.axis


def attitude_error(O1, O2) -> float:
    """``tr(O1^T O2 - I)``; zero iff the orientations coincide, in ``[-4, 0]``."""
    return float(np.vdot(O1, O2)) - 3.0


def orthonormality_error(M) -> float:
    E = np.asarray(M, dtype=float)
    E = E.T @ E - _I3
    return math.sqrt(np.vdot(E, E))


def project_to_so3(M) -> np.ndarray:
    """Nearest rotation in Frobenius norm (orthogonal polar factor).

    Raises
    ------
    DegenerateError
        If ``det(M) <= 0`` or the smallest singular value is below ``1e-9``.
    """
    M = np.asarray(M, dtype=float)
    U, s, Vt = np.linalg.svd(M)
    if s[-1] < 1e-9:
        raise DegenerateError(f"smallest singular value {s[-1]:.3e} below 1e-9")
    if np.linalg.det(M) <= 0.0:
        raise DegenerateError("matrix has non-positive determinant")
    return U @ Vt


def polish(O: np.ndarray) -> np.ndarray:
    """One Newton step toward the polar factor, for already-orthonormal input.

    Removes float drift of order ``eps`` at two matrix products; use
    :func:`project_to_so3` for anything further from SO(3).
    """
    return 1.5 * O - 0.5 * (O @ O.T @ O)


def as_orientation(M) -> np.ndarray:
    """Validate ``M`` as an orientation matrix.

    Matrices within ``1e-9`` of SO(3) are returned as is, drift up to ``1e-3``
    is projected away, anything beyond raises :class:`DegenerateError`.
    """
    M = np.array(M, dtype=float)
    if M.shape != (3, 3) or not np.all(np.isfinite(M)):
        raise DegenerateError(f"not a finite 3x3 matrix: shape {M.shape}")
    err = orthonormality_error(M)
    det = np.linalg.det(M)
    if err <= ORTHO_TOL and abs(det - 1.0) <= ORTHO_TOL:
        return M
    if err < PROJECT_TOL and det > 0.0:
        return project_to_so3(M)
    raise DegenerateError(f"matrix is not a rotation (||M^T M - I|| = {err:.3e}, det = {det:.6f})")


def relative_orientation(O_est, O_meas) -> np.ndarray:
    """``O_est @ O_meas^T``: orientation of the estimate relative to the measurement."""
    return polish(np.asarray(O_est) @ np.asarray(O_meas).T)


def euler_axis_matrix(axis: int, angle: float) -> np.ndarray:
    """Elementary coordinate transformation about body axis 1, 2 or 3."""
    c, s = math.cos(angle), math.sin(angle)
    if axis == 1:
        return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])
    if axis == 2:
        return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    if axis == 3:
        return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"axis must be 1, 2 or 3, got {axis}")


def euler321_to_matrix(e) -> np.ndarray:
    """``O1(phi) O2(theta) O3(psi)`` for ``e = (psi, theta, phi)``."""
    psi, theta, phi = e[0], e[1], e[2]
    cps, sps = math.cos(psi), math.sin(psi)
    cth, sth = math.cos(theta), math.sin(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    return np.array(
        [
            [cth * cps, cth * sps, -sth],
            [sph * sth * cps - cph * sps, sph * sth * sps + cph * cps, sph * cth],
            [cph * sth * cps + sph * sps, cph * sth * sps - sph * cps, cph * cth],
        ]
    )


def euler321_to_matrix_array(E) -> np.ndarray:
    """Vectorized :func:`euler321_to_matrix` for angles of shape ``(..., 3)``."""
    E = np.asarray(E, dtype=float)
    cps, sps = np.cos(E[..., 0]), np.sin(E[..., 0])
    cth, sth = np.cos(E[..., 1]), np.sin(E[..., 1])
    cph, sph = np.cos(E[..., 2]), np.sin(E[..., 2])
    O = np.empty(E.shape[:-1] + (3, 3))
    O[..., 0, 0] = cth * cps
    O[..., 0, 1] = cth * sps
    O[..., 0, 2] = -sth
    O[..., 1, 0] = sph * sth * cps - cph * sps
    O[..., 1, 1] = sph * sth * sps + cph * cps
    O[..., 1, 2] = sph * cth
    O[..., 2, 0] = cph * sth * cps + sph * sps
    O[..., 2, 1] = cph * sth * sps - sph * cps
    O[..., 2, 2] = cph * cth
    return O


def matrix_to_euler321(O) -> Euler321:
    """3-2-1 Euler angles of ``O``.

    At gimbal lock (``|sin(theta)| > 1 - 1e-9``) roll is set to zero, yaw
    absorbs the remaining rotation and ``gimbal_lock`` is flagged.
    """
    O = np.asarray(O, dtype=float)
    s = -O[0, 2]
    theta = math.atan2(s, math.hypot(O[0, 0], O[0, 1]))
    if abs(s) > 1.0 - GIMBAL_TOL:
        psi = math.atan2(-O[1, 0], O[1, 1])
        return Euler321(_flip_minus_pi(psi), theta, 0.0, gimbal_lock=True)
    psi = math.atan2(O[0, 1], O[0, 0])
    phi = math.atan2(O[1, 2], O[2, 2])
    return Euler321(_flip_minus_pi(psi), theta, _flip_minus_pi(phi))


def matrix_to_euler321_array(O) -> np.ndarray:
    """Vectorized :func:`matrix_to_euler321` for a stack ``(..., 3, 3)``.

    Returns ``(..., 3)`` angles ``(psi, theta, phi)`` without the gimbal flag.
    """
    O = np.asarray(O, dtype=float)
    s = -O[..., 0, 2]
    theta = np.arctan2(s, np.hypot(O[..., 0, 0], O[..., 0, 1]))
    lock = np.abs(s) > 1.0 - GIMBAL_TOL
    psi = np.where(lock, np.arctan2(-O[..., 1, 0], O[..., 1, 1]), np.arctan2(O[..., 0, 1], O[..., 0, 0]))
    phi = np.where(lock, 0.0, np.arctan2(O[..., 1, 2], O[..., 2, 2]))
    out = np.stack((psi, theta, phi), axis=-1)
    out[..., 0::2][out[..., 0::2] == -np.pi] = np.pi
    return out


def _flip_minus_pi(a: float) -> float:
    # atan2 range is [-pi, pi]; the convention is (-pi, pi]
    return math.pi if a == -math.pi else float(a)


def quat_to_matrix(q) -> np.ndarray:
    """``I - 2 eta cross(eps) + 2 cross(eps)^2`` for ``q = [eta, eps]``."""
    eta, e1, e2, e3 = q[0], q[1], q[2], q[3]
    return np.array(
        [
            [1.0 - 2.0 * (e2 * e2 + e3 * e3), 2.0 * (e1 * e2 + eta * e3), 2.0 * (e1 * e3 - eta * e2)],
            [2.0 * (e1 * e2 - eta * e3), 1.0 - 2.0 * (e1 * e1 + e3 * e3), 2.0 * (e2 * e3 + eta * e1)],
            [2.0 * (e1 * e3 + eta * e2), 2.0 * (e2 * e3 - eta * e1), 1.0 - 2.0 * (e1 * e1 + e2 * e2)],
        ]
    )


def matrix_to_quat(O) -> np.ndarray:
    """Quaternion of ``O`` with ``eta >= 0`` (Shepperd's largest-pivot method)."""
    O = np.asarray(O, dtype=float)
    tr = O[0, 0] + O[1, 1] + O[2, 2]
    # 4 eta^2 = 1 + tr, 4 e_i^2 = 1 + 2 O_ii - tr
    pivots = (tr, O[0, 0], O[1, 1], O[2, 2])
    k = int(np.argmax(pivots))
    d1 = O[1, 2] - O[2, 1]  # 4 eta e1
    d2 = O[2, 0] - O[0, 2]  # 4 eta e2
    d3 = O[0, 1] - O[1, 0]  # 4 eta e3
    s12 = O[0, 1] + O[1, 0]  # 4 e1 e2
    s13 = O[0, 2] + O[2, 0]  # 4 e1 e3
    s23 = O[1, 2] + O[2, 1]  # 4 e2 e3
    if k == 0:
        r = 2.0 * math.sqrt(max(1.0 + tr, 0.0))  # 4 eta
        q = np.array([0.25 * r, d1 / r, d2 / r, d3 / r])
    elif k == 1:
        r = 2.0 * math.sqrt(max(1.0 + 2.0 * O[0, 0] - tr, 0.0))  # 4 e1
        q = np.array([d1 / r, 0.25 * r, s12 / r, s13 / r])
    elif k == 2:
        r = 2.0 * math.sqrt(max(1.0 + 2.0 * O[1, 1] - tr, 0.0))
        q = np.array([d2 / r, s12 / r, 0.25 * r, s23 / r])
    else:
        r = 2.0 * math.sqrt(max(1.0 + 2.0 * O[2, 2] - tr, 0.0))
        q = np.array([d3 / r, s13 / r, s23 / r, 0.25 * r])
    if q[0] < 0.0:
        q = -q
    return q / np.linalg.norm(q)


def quat_from_axis_angle(angle: float, axis) -> np.ndarray:
    """Quaternion whose matrix equals ``exp_so3(angle * axis)``."""
    axis = np.asarray(axis, dtype=float)
    return np.concatenate(([math.cos(0.5 * angle)], -math.sin(0.5 * angle) * axis))


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return q / np.linalg.norm(q)


def quat_from_rotvec(v) -> np.ndarray:
    """Quaternion whose matrix equals ``exp_so3(v)``."""
    x, y, z = float(v[0]), float(v[1]), float(v[2])
    t = math.sqrt(x * x + y * y + z * z)
    # -sin(t/2)/t, with the series limit -1/2 at t -> 0
    s = -0.5 + t * t / 48.0 if t < SMALL_ANGLE else -math.sin(0.5 * t) / t
    return np.array([math.cos(0.5 * t), s * x, s * y, s * z])


def quat_multiply(q1, q2) -> np.ndarray:
    """Quaternion of ``quat_to_matrix(q1) @ quat_to_matrix(q2)``.

    In Hamilton terms this is ``q2 * q1``, since ``quat_to_matrix`` is the
    transpose of the Hamilton rotation matrix.
    """
    a0, a1, a2, a3 = q2[0], q2[1], q2[2], q2[3]
    b0, b1, b2, b3 = q1[0], q1[1], q1[2], q1[3]
    return np.array(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    )
