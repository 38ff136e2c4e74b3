"""Recursive minimization of the retrospective cost.

For gains ``theta`` the retrospective performance variable is

    zhat_i(theta) = z_i + phi_f_i @ theta - u_f_i

where ``phi_f`` and ``u_f`` are the regressor and input passed through the FIR
filter ``G_f(q) = sum_j N_j q^-j``. The cost after step ``k`` is

    J_k(theta) = sum_i lam^(k-i) [Rz zhat_i^2 + Ru (phi_i @ theta)^2]
                 + lam^(k+1) (theta - theta0)^T P0^-1 (theta - theta0)

and :func:`rls_step` returns its minimizer recursively. :func:`batch_cost` and
:func:`batch_argmin` evaluate the same cost directly and exist to check the
recursion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ConfigError, SingularInnovationError

COND_LIMIT = 1e12


@dataclass(frozen=True)
class FirFilter:
    """Coefficients ``N_1 .. N_nf`` of ``G_f(q) = sum_j N_j / q^j``."""

    coefficients: tuple = (1.0,)

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 1:
            raise ConfigError("FIR filter needs at least one coefficient")
        if not all(np.isfinite(coeffs)):
            raise ConfigError("FIR coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def order(self) -> int:
        return len(self.coefficients)


@dataclass(frozen=True)
class RlsConfig:
    l_theta: int = 3
    p0_scale: float = 0.1
    theta0: Optional[tuple] = None
    rz: float = 1.0
    ru: float = 0.0
    filter: FirFilter = field(default_factory=FirFilter)
    lam: float = 1.0

    def __post_init__(self):
        if self.l_theta < 1:
            raise ConfigError("l_theta must be positive")
        if not self.p0_scale > 0:
            raise ConfigError("p0_scale must be > 0")
        if not self.rz > 0:
            raise ConfigError("rz must be > 0")
        if not self.ru >= 0:
            raise ConfigError("ru must be >= 0")
        if not 0 < self.lam <= 1:
            raise ConfigError("lam must lie in (0, 1]")
        if self.theta0 is not None and len(self.theta0) != self.l_theta:
            raise ConfigError(f"theta0 has length {len(self.theta0)}, expected {self.l_theta}")

    @property
    def theta_init(self) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(self.l_theta)
        return np.asarray(self.theta0, dtype=float)

    @property
    def P0(self) -> np.ndarray:
        return self.p0_scale * np.eye(self.l_theta)


@dataclass(frozen=True)
class RlsState:
    """Gains, covariance and the regressor/input history feeding ``G_f``.

    Row ``j`` of ``phi_history`` (entry ``j`` of ``u_history``) holds the value
    from ``j + 1`` steps ago; entries before time zero are zero.
    """

    theta: np.ndarray
    P: np.ndarray
    phi_history: np.ndarray
    u_history: np.ndarray
    lam: float = 1.0

    @classmethod
    def initial(cls, cfg: RlsConfig) -> "RlsState":
        nf = cfg.filter.order
        return cls(
            theta=cfg.theta_init.copy(),
            P=cfg.P0,
            phi_history=np.zeros((nf, cfg.l_theta)),
            u_history=np.zeros(nf),
            lam=cfg.lam,
        )

    @property
    def u_last(self) -> float:
        return float(self.u_history[0])


def filtered_signals(state: RlsState, filt: FirFilter) -> tuple[np.ndarray, float]:
    """``(G_f phi, G_f u)`` at the current step from the stored history."""
    N = np.asarray(filt.coefficients)
    return N @ state.phi_history, float(N @ state.u_history)


def compute_u(phi, theta) -> float:
    """Adaptive signal ``u = phi @ theta``."""
    return float(np.dot(phi, theta))


def rls_step(
    state: RlsState,
    z: float,
    phi,
    cfg: RlsConfig,
    u: Optional[float] = None,
) -> RlsState:
    """Advance the retrospective-cost minimizer by one step.

    Parameters
    ----------
    state
        Gains ``theta_k``, covariance ``P_k`` and history up to step ``k - 1``.
    z
        Performance variable ``z_k``.
    phi
        Regressor ``phi_k``; enters the ``Ru`` penalty now and the filtered
        regressor at later steps.
    u
        Input ``u_k`` applied at this step. Defaults to ``phi_k @ theta_{k+1}``,
        the signal an adaptive law computes from the fresh gains.

    Returns
    -------
    RlsState
        ``theta_{k+1} = argmin J_k``, ``P_{k+1}`` and the history shifted by one.

    Raises
    ------
    SingularInnovationError
        If the 2x2 innovation block has condition number above ``1e12``.
    """
    phi = np.asarray(phi, dtype=float)
    N = cfg.filter.array
    phi_f = N @ state.phi_history
    u_f = float(N @ state.u_history)
    theta, P, lam = state.theta, state.P, state.lam
    rz, ru = cfg.rz, cfg.ru

    Phi_bar = np.array((phi_f, phi))
    PPhiT = P @ Phi_bar.T
    # (lam R^-1 + Phi P Phi^T)^-1 = R (lam I + Phi P Phi^T R)^-1, valid for Ru = 0
    (g00, g01), (g10, g11) = (Phi_bar @ PPhiT).tolist()
    i00, i01, i10, i11 = _inv2(lam + g00 * rz, g01 * ru, g10 * rz, lam + g11 * ru)
    M = np.array(((rz * i00, rz * i01), (ru * i10, ru * i11)))
    P_new = P - PPhiT @ M @ PPhiT.T
    if lam != 1.0:
        P_new /= lam
    P_new = 0.5 * (P_new + P_new.T)

    r0 = z + float(phi_f @ theta) - u_f
    r1 = float(phi @ theta)
    theta_new = theta - P_new @ (Phi_bar.T @ np.array((rz * r0, ru * r1)))

    if u is None:
        u = float(phi @ theta_new)
    if N.size == 1:
        phi_hist = phi.reshape(1, -1).copy()
        u_hist = np.array((u,))
    else:
        phi_hist = np.concatenate((phi[None, :], state.phi_history[:-1]))
        u_hist = np.concatenate(((u,), state.u_history[:-1]))
    return RlsState(theta_new, P_new, phi_hist, u_hist, lam)


def _inv2(a: float, b: float, c: float, d: float) -> tuple[float, float, float, float]:
    """Closed-form inverse of ``[[a, b], [c, d]]`` with a Frobenius condition-number guard."""
    det = a * d - b * c
    norm2 = a * a + b * b + c * c + d * d
    # cond_F = ||S||_F ||S^-1||_F = ||S||_F^2 / |det|, an upper bound on cond_2
    if not math.isfinite(norm2) or det == 0.0 or norm2 / abs(det) > COND_LIMIT:
        raise SingularInnovationError(f"innovation block is singular (det = {det:.3e})")
    return d / det, -b / det, -c / det, a / det


class CostRecord(NamedTuple):
    """One term of the retrospective cost."""

    z: float
    phi: np.ndarray
    u: float
    phi_f: np.ndarray
    u_f: float


def records_from_sequence(zs: Sequence[float], phis, us: Sequence[float], filt: FirFilter) -> list[CostRecord]:
    """Cost records for raw sequences, applying ``G_f`` by direct convolution."""
    N = filt.coefficients
    phis = np.asarray(phis, dtype=float)
    out = []
    for k in range(len(zs)):
        phi_f = np.zeros(phis.shape[1])
        u_f = 0.0
        for j, Nj in enumerate(N, start=1):
            if k - j >= 0:
                phi_f = phi_f + Nj * phis[k - j]
                u_f += Nj * us[k - j]
        out.append(CostRecord(float(zs[k]), phis[k], float(us[k]), phi_f, u_f))
    return out


def batch_cost(theta, records: Iterable[CostRecord], cfg: RlsConfig) -> float:
    """Retrospective cost ``J_k(theta)`` evaluated term by term."""
    theta = np.asarray(theta, dtype=float)
    records = list(records)
    n = len(records)
    J = 0.0
    for i, r in enumerate(records):
        w = cfg.lam ** (n - 1 - i)
        zhat = r.z + r.phi_f @ theta - r.u_f
        uhat = r.phi @ theta
        J += w * (cfg.rz * zhat * zhat + cfg.ru * uhat * uhat)
    d = theta - cfg.theta_init
    J += cfg.lam**n * d @ np.linalg.solve(cfg.P0, d)
    return float(J)


def batch_hessian(records: Iterable[CostRecord], cfg: RlsConfig) -> np.ndarray:
    """Hessian of :func:`batch_cost` (constant, the cost is quadratic)."""
    records = list(records)
    n = len(records)
    H = cfg.lam**n * np.linalg.inv(cfg.P0)
    for i, r in enumerate(records):
        w = cfg.lam ** (n - 1 - i)
        H = H + w * (cfg.rz * np.outer(r.phi_f, r.phi_f) + cfg.ru * np.outer(r.phi, r.phi))
    return 2.0 * H


def batch_argmin(records: Iterable[CostRecord], cfg: RlsConfig) -> np.ndarray:
    """Minimizer of :func:`batch_cost` from the normal equations."""
    records = list(records)
    n = len(records)
    P0_inv = np.linalg.inv(cfg.P0)
    A = cfg.lam**n * P0_inv
    b = cfg.lam**n * P0_inv @ cfg.theta_init
    for i, r in enumerate(records):
        w = cfg.lam ** (n - 1 - i)
        A = A + w * (cfg.rz * np.outer(r.phi_f, r.phi_f) + cfg.ru * np.outer(r.phi, r.phi))
        b = b + w * cfg.rz * r.phi_f * (r.u_f - r.z)
    return np.linalg.solve(A, b)
