"""Measurement construction and synthetic sensor noise.

Random draws come from :func:`channel_rngs`, which splits one integer seed
into independent PCG64 streams, one per sensor channel, via
``numpy.random.SeedSequence.spawn``. Channel order is fixed by
:data:`CHANNELS`, so a seed reproduces every channel bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import so3
from .errors import ConfigError, DegenerateGeometryError, GimbalLockError

CHANNELS = ("gyro", "orientation")
PARALLEL_TOL = 1e-6


@dataclass(frozen=True)
class NoiseModel:
    """Gyro bias/noise and Euler-angle measurement noise, all in radians.

    ``euler_sigma`` is either one standard deviation for all three angles or
    a ``(psi, theta, phi)`` triple.
    """

    gyro_bias: tuple = (0.0, 0.0, 0.0)
    gyro_sigma: float = 0.0
    euler_sigma: float | tuple = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.gyro_bias) != 3:
            raise ConfigError("gyro_bias needs three components")
        if not self.gyro_sigma >= 0:
            raise ConfigError("gyro_sigma must be >= 0")
        if np.any(np.asarray(self.euler_sigma) < 0) or np.size(self.euler_sigma) not in (1, 3):
            raise ConfigError("euler_sigma must be a non-negative scalar or triple")

    @classmethod
    def reference(cls, seed: int = 0) -> "NoiseModel":
        """Bias (5, 7, 4) deg/s, gyro noise 2 deg/s, Euler noise 5 deg."""
        return cls(
            gyro_bias=tuple(np.radians([5.0, 7.0, 4.0])),
            gyro_sigma=math.radians(2.0),
            euler_sigma=math.radians(5.0),
            seed=seed,
        )


@dataclass(frozen=True)
class ImuRecord:
    """One log sample. Gyro in rad/s; accel and mag in any consistent units."""

    t: float
    gyro: np.ndarray
    accel: np.ndarray
    mag: np.ndarray
    truth_quat: Optional[np.ndarray] = None


def channel_rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(CHANNELS))
    return {name: np.random.Generator(np.random.PCG64(ss)) for name, ss in zip(CHANNELS, children)}


def orientation_from_accel_mag(a, m) -> np.ndarray:
    """Orientation of a non-accelerating body from gravity and magnetic field.

    The reference frame has its third axis along the measured specific force
    and the field in the plane of its first and third axes. Columns of the
    result are those reference axes resolved in the body frame.

    Raises
    ------
    DegenerateGeometryError
        For a zero vector or (anti)parallel ``a`` and ``m``.
    """
    a0, a1, a2 = (float(x) for x in a)
    m0, m1, m2 = (float(x) for x in m)
    na = math.sqrt(a0 * a0 + a1 * a1 + a2 * a2)
    nm = math.sqrt(m0 * m0 + m1 * m1 + m2 * m2)
    if not (math.isfinite(na) and math.isfinite(nm)) or na < 1e-6 or nm < 1e-6:
        raise DegenerateGeometryError("accelerometer or magnetometer vector is zero or non-finite")
    k = np.array((a0, a1, a2)) / na
    mh = np.array((m0, m1, m2)) / nm
    if abs(k @ mh) > 1.0 - PARALLEL_TOL:
        raise DegenerateGeometryError("gravity and magnetic field are parallel; heading is unobservable")
    j = so3.cross3(k, mh)
    j /= math.sqrt(j @ j)
    i = so3.cross3(j, k)
    return so3.polish(np.array((i, j, k)).T)


def orientations_from_accel_mag(a, m) -> tuple[np.ndarray, np.ndarray]:
    """Stacked :func:`orientation_from_accel_mag` on ``(n, 3)`` arrays.

    Returns the ``(n, 3, 3)`` orientations and a boolean mask of valid rows;
    rows that would raise :class:`DegenerateGeometryError` are NaN.
    """
    a = np.asarray(a, dtype=float)
    m = np.asarray(m, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        na = np.sqrt(np.einsum("ni,ni->n", a, a))[:, None]
        nm = np.sqrt(np.einsum("ni,ni->n", m, m))[:, None]
        k = a / na
        mh = m / nm
        ok = np.isfinite(na[:, 0]) & np.isfinite(nm[:, 0]) & (na[:, 0] >= 1e-6) & (nm[:, 0] >= 1e-6)
        ok &= np.abs(np.einsum("ni,ni->n", k, mh)) <= 1.0 - PARALLEL_TOL
        j = np.cross(k, mh)
        j /= np.sqrt(np.einsum("ni,ni->n", j, j))[:, None]
        i = np.cross(j, k)
    O = np.stack((i, j, k), axis=-1)
    O = 1.5 * O - 0.5 * (O @ np.swapaxes(O, -1, -2) @ O)
    O[~ok] = np.nan
    return O, ok


def apply_gyro_noise(omega, model: NoiseModel, std_normal) -> np.ndarray:
    return np.asarray(omega, dtype=float) + np.asarray(model.gyro_bias) + model.gyro_sigma * np.asarray(std_normal)


def noisy_gyro(omega, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """``omega + b + sigma_w * N(0, I)``."""
    return apply_gyro_noise(omega, model, rng.standard_normal(3))


def perturb_euler(e: so3.Euler321, model: NoiseModel, std_normal) -> so3.Euler321:
    """Add Euler noise and fold the result back to canonical ranges."""
    if e.gimbal_lock:
        raise GimbalLockError("true orientation is at gimbal lock")
    psi, theta, phi = perturb_euler_array(np.asarray(e[:3]), model, std_normal)
    return so3.Euler321(float(psi), float(theta), float(phi))


def perturb_euler_array(E, model: NoiseModel, std_normal) -> np.ndarray:
    """Stacked :func:`perturb_euler` on angles of shape ``(..., 3)``.

    Gimbal lock of the input is not checked here.
    """
    E = np.asarray(E, dtype=float) + np.asarray(model.euler_sigma) * np.asarray(std_normal)
    psi, theta, phi = so3.wrap_angle(E[..., 0]), so3.wrap_angle(E[..., 1]), E[..., 2]
    # (psi, theta, phi) ~ (psi + pi, pi - theta, phi + pi) folds pitch into [-pi/2, pi/2]
    fold = np.abs(theta) > 0.5 * math.pi
    theta = np.where(fold, np.copysign(math.pi, theta) - theta, theta)
    psi = so3.wrap_angle(np.where(fold, psi + math.pi, psi))
    phi = so3.wrap_angle(np.where(fold, phi + math.pi, phi))
    return np.stack((psi, theta, phi), axis=-1)


def noisy_orientation(O_true, model: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Orientation rebuilt from the truth's Euler angles plus Gaussian noise."""
    e = perturb_euler(so3.matrix_to_euler321(O_true), model, rng.standard_normal(3))
    return so3.euler321_to_matrix(e)
