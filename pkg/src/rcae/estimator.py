"""Retrospective cost attitude estimator.

The estimate is propagated multiplicatively,

    O_est <- exp_so3(-(omega_m * dt + eta)) @ O_est,

where the correction ``eta = u * n`` points along the eigenaxis ``n`` of the
estimate relative to the measured orientation and its magnitude ``u`` comes
from an adaptive PID law whose gains are fit online by :mod:`rcae.rls`.
No gyro-bias state is carried.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import so3
from .errors import ConfigError
from .rls import RlsConfig, RlsState, compute_u, rls_step


@dataclass(frozen=True)
class RcaeConfig:
    dt: float = 0.01
    rls: RlsConfig = field(default_factory=RlsConfig)
    gamma_limit: float = 100.0
    initial_estimate: np.ndarray = field(default_factory=lambda: np.eye(3))
    reproject_every: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.gamma_limit > 0:
            raise ConfigError("gamma_limit must be > 0")
        if self.rls.l_theta != 3:
            raise ConfigError("the PID regressor needs l_theta = 3")
        object.__setattr__(self, "initial_estimate", so3.as_orientation(self.initial_estimate))


@dataclass(frozen=True)
class RcaeState:
    estimate: np.ndarray
    rls: RlsState
    gamma: float = 0.0
    z_prev: float = 0.0
    u_prev: float = 0.0
    step_index: int = 0

    @classmethod
    def initial(cls, cfg: RcaeConfig) -> "RcaeState":
        return cls(estimate=cfg.initial_estimate.copy(), rls=RlsState.initial(cfg.rls))

    @property
    def theta(self) -> np.ndarray:
        return self.rls.theta


class StepTelemetry(NamedTuple):
    z: float
    u: float
    theta: np.ndarray
    eta: np.ndarray


def build_regressor(z: float, gamma: float, z_prev: float) -> np.ndarray:
    """PID regressor ``[z_k, gamma_k, z_k - z_{k-1}]``."""
    return np.array([z, gamma, z - z_prev])


def correction_signal(u: float, rel) -> np.ndarray:
    """``u`` times the eigenaxis of ``rel``; zero when ``rel`` is (near) identity."""
    aa = so3.axis_angle(rel)
    if aa.degenerate:
        return np.zeros(3)
    return u * aa.axis


def dead_reckon_step(estimate, omega_m, dt: float) -> np.ndarray:
    """Gyro-only propagation ``exp_so3(-omega_m dt) @ estimate``."""
    return so3.exp_so3(-np.asarray(omega_m, dtype=float) * dt) @ estimate


def rcae_step(state: RcaeState, omega_m, O_meas, cfg: RcaeConfig, dt: float | None = None) -> tuple[RcaeState, StepTelemetry]:
    """One estimator step: error, gain update, correction, propagation.

    ``dt`` overrides ``cfg.dt`` for irregularly sampled logs. The gains used
    for ``u_k`` are ``theta_{k+1}``, the minimizer of the retrospective cost
    including ``z_k``. Raises :class:`~rcae.errors.SingularInnovationError`
    from the gain update, leaving ``state`` untouched.
    """
    dt = cfg.dt if dt is None else dt
    rel = so3.relative_orientation(state.estimate, O_meas)
    z = float(rel[0, 0] + rel[1, 1] + rel[2, 2] - 3.0)
    lim = cfg.gamma_limit
    gamma = min(max(state.gamma + z, -lim), lim)
    phi = build_regressor(z, gamma, state.z_prev)

    rls = rls_step(state.rls, z, phi, cfg.rls)
    u = compute_u(phi, rls.theta)
    eta = correction_signal(u, rel)

    estimate = so3.exp_so3(-(np.asarray(omega_m, dtype=float) * dt + eta)) @ state.estimate
    k = state.step_index + 1
    if k % cfg.reproject_every == 0 or so3.orthonormality_error(estimate) > so3.ORTHO_TOL:
        estimate = so3.project_to_so3(estimate)

    new = RcaeState(estimate=estimate, rls=rls, gamma=gamma, z_prev=z, u_prev=u, step_index=k)
    return new, StepTelemetry(z, u, rls.theta, eta)
