"""Multiplicative extended Kalman filter with gyro-bias estimation.

State: quaternion ``q`` (see :mod:`rcae.so3` for the convention) and gyro
bias ``bias``. The 6-dim error state is ``[delta, bias_error]`` where the true
orientation is ``exp_so3(-delta) @ O(q)``, i.e. a small rotation applied on
the left in the body frame, and ``bias_error = bias_true - bias``.
Measurements are the body-frame directions of gravity and the magnetic
field, stacked into one 6-dim residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import so3
from .errors import ConfigError, DegenerateGeometryError, SingularInnovationError

COND_LIMIT = 1e12
_I6 = np.eye(6)


def default_ref_mag(dip_deg: float = 60.0) -> np.ndarray:
    """Unit field direction in the reference frame's 1-3 plane, dipping ``dip_deg``."""
    d = math.radians(dip_deg)
    return np.array([math.cos(d), 0.0, math.sin(d)])


def _blkdiag(a: float, b: float) -> np.ndarray:
    return np.diag([a, a, a, b, b, b])


@dataclass(frozen=True)
class MekfConfig:
    dt: float = 0.01
    Q: np.ndarray = field(default_factory=lambda: _blkdiag(1e-4, 1.0))
    R: np.ndarray = field(default_factory=lambda: _blkdiag(0.01, 100.0))
    P0: np.ndarray = field(default_factory=lambda: 1e4 * np.eye(6))
    ref_gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    ref_mag: np.ndarray = field(default_factory=default_ref_mag)
    initial_quat: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    initial_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    r_min_eig: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        for name in ("Q", "R", "P0"):
            M = np.asarray(getattr(self, name), dtype=float)
            if M.shape != (6, 6) or not np.allclose(M, M.T):
                raise ConfigError(f"{name} must be a symmetric 6x6 matrix")
            if np.linalg.eigvalsh(M).min() < -1e-12:
                raise ConfigError(f"{name} must be positive semidefinite")
            object.__setattr__(self, name, M)
        g = np.asarray(self.ref_gravity, dtype=float)
        m = np.asarray(self.ref_mag, dtype=float)
        if abs(np.linalg.norm(g) - 1.0) > 1e-9 or abs(np.linalg.norm(m) - 1.0) > 1e-9:
            raise ConfigError("reference vectors must be unit norm")
        if np.linalg.norm(np.cross(g, m)) < 1e-6:
            raise ConfigError("reference vectors must not be parallel")
        object.__setattr__(self, "ref_gravity", g)
        object.__setattr__(self, "ref_mag", m)
        object.__setattr__(self, "initial_quat", so3.quat_normalize(self.initial_quat))
        object.__setattr__(self, "initial_bias", np.asarray(self.initial_bias, dtype=float))
        object.__setattr__(self, "r_min_eig", float(np.linalg.eigvalsh(self.R)[0]))


@dataclass(frozen=True)
class MekfState:
    q: np.ndarray
    bias: np.ndarray
    P: np.ndarray

    @classmethod
    def initial(cls, cfg: MekfConfig) -> "MekfState":
        return cls(cfg.initial_quat.copy(), cfg.initial_bias.copy(), cfg.P0.copy())

    @property
    def orientation(self) -> np.ndarray:
        return so3.quat_to_matrix(self.q)


def mekf_predict(state: MekfState, omega_m, cfg: MekfConfig, dt: float | None = None) -> MekfState:
    """Propagate with the bias-corrected rate; ``P <- F P F^T + Q dt``."""
    dt = cfg.dt if dt is None else dt
    w = (np.asarray(omega_m, dtype=float) - state.bias) * -dt
    q = so3.quat_multiply(so3.quat_from_rotvec(w), state.q)
    q /= math.sqrt(q @ q)

    # F = [[exp(-w dt), -I dt], [0, I]]
    F = _I6.copy()
    F[:3, :3] = so3.exp_so3(w)
    F[0, 3] = F[1, 4] = F[2, 5] = -dt
    P = F @ state.P @ F.T
    P += cfg.Q * dt
    return MekfState(q, state.bias, 0.5 * (P + P.T))


def _cross_rows(a, b) -> np.ndarray:
    # [cross(a); cross(b)], the attitude block of the measurement Jacobian
    a0, a1, a2 = a.tolist()
    b0, b1, b2 = b.tolist()
    return np.array(
        (
            (0.0, -a2, a1),
            (a2, 0.0, -a0),
            (-a1, a0, 0.0),
            (0.0, -b2, b1),
            (b2, 0.0, -b0),
            (-b1, b0, 0.0),
        )
    )


def measurement_jacobian(q, cfg: MekfConfig) -> tuple[np.ndarray, np.ndarray]:
    """Predicted ``[gravity; field]`` directions and their error-state Jacobian."""
    O = so3.quat_to_matrix(q)
    y_g = O @ cfg.ref_gravity
    y_m = O @ cfg.ref_mag
    H = np.zeros((6, 6))
    # exp(-delta) O r ~ O r + cross(O r) delta
    H[:, :3] = _cross_rows(y_g, y_m)
    return np.concatenate((y_g, y_m)), H


def mekf_update(state: MekfState, a_meas, m_meas, cfg: MekfConfig) -> MekfState:
    """Joint gravity/field update with a Joseph-form covariance.

    Raises
    ------
    DegenerateGeometryError
        If either measured vector is (near) zero or non-finite.
    SingularInnovationError
        If the innovation covariance has condition number above ``1e12``.
    """
    a = np.asarray(a_meas, dtype=float)
    m = np.asarray(m_meas, dtype=float)
    na, nm = math.sqrt(a @ a), math.sqrt(m @ m)
    if not (math.isfinite(na) and math.isfinite(nm)) or na < 1e-6 or nm < 1e-6:
        raise DegenerateGeometryError("measurement vector is zero or non-finite")
    O = so3.quat_to_matrix(state.q)
    y_g = O @ cfg.ref_gravity
    y_m = O @ cfg.ref_mag
    Hx = _cross_rows(y_g, y_m)  # the bias block of H is zero

    P = state.P
    PHt = P[:, :3] @ Hx.T
    S = Hx @ PHt[:3]
    S += cfg.R
    # S >= R, so cond(S) <= tr(S) / min eig(R); exact check only past that bound
    r_min = cfg.r_min_eig
    if not (r_min > 0 and np.trace(S) / r_min <= COND_LIMIT):
        cond = np.linalg.cond(S)
        if not np.isfinite(cond) or cond > COND_LIMIT:
            raise SingularInnovationError(f"innovation condition number {cond:.3e}")
    K = np.linalg.solve(S, PHt.T).T
    r = np.concatenate((a / na - y_g, m / nm - y_m))
    dx = K @ r

    q = so3.quat_multiply(so3.quat_from_rotvec(-dx[:3]), state.q)
    q /= math.sqrt(q @ q)
    IKH = _I6.copy()
    IKH[:, :3] -= K @ Hx
    P_new = IKH @ P @ IKH.T
    P_new += K @ cfg.R @ K.T
    return MekfState(q, state.bias + dx[3:], 0.5 * (P_new + P_new.T))


def mekf_measurements_from_orientation(O_meas, cfg: MekfConfig) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame gravity and field directions consistent with ``O_meas``."""
    O = np.asarray(O_meas, dtype=float)
    return O @ cfg.ref_gravity, O @ cfg.ref_mag
