"""Simulation, log replay and estimator comparison.

Every run produces one row per sample with the true, measured and estimated
3-2-1 Euler angles, each estimator's attitude error ``z`` against the
measured orientation, and the adaptive-law telemetry of the retrospective
cost estimator. Row ``k`` reports each estimate at time ``t_k`` after it has
consumed measurement ``k`` (for the Kalman filter, its posterior) and before
propagating with gyro sample ``k``.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from . import config as _config
from . import io as _io
from . import so3
from .errors import ConfigError, GimbalLockError, MalformedRecordError, RcaeError
from .estimator import RcaeConfig, RcaeState, dead_reckon_step, rcae_step
from .mekf import MekfConfig, MekfState, mekf_predict, mekf_update
from .sensors import (
    ImuRecord,
    NoiseModel,
    apply_gyro_noise,
    channel_rngs,
    orientations_from_accel_mag,
    perturb_euler_array,
)

log = logging.getLogger(__name__)

ESTIMATORS = ("rcae", "mekf", "dead_reckon")
GRAVITY = 9.80665
STEADY_FRACTION = 0.25
GAP_FACTOR = 5.0
RCAE_EXTRA = ("u", "kp", "ki", "kd", "eta_x", "eta_y", "eta_z")


@dataclass(frozen=True)
class ScenarioConfig:
    """Synthetic experiment; rates in rad/s, angles in rad.

    The true body rate is ``omega_i(t) = amplitudes[i] * cos(frequencies[i] * t)``.
    """

    duration: float = 20.0
    dt: float = 0.01
    amplitudes: tuple = tuple(np.radians([80.0, 60.0, 40.0]))
    frequencies: tuple = (5.0, 7.0, 9.0)
    initial_euler: tuple = tuple(np.radians([30.0, 20.0, 10.0]))
    noise: NoiseModel = field(default_factory=NoiseModel.reference)
    rcae: RcaeConfig = field(default_factory=RcaeConfig)
    mekf: MekfConfig = field(default_factory=MekfConfig)
    estimators: tuple = ESTIMATORS

    def __post_init__(self):
        if not (self.duration > 0 and self.dt > 0):
            raise ConfigError("duration and dt must be > 0")
        if self.duration / self.dt > 1e8:
            raise ConfigError("duration/dt exceeds 1e8 steps")
        if self.n_steps < 1:
            raise ConfigError("duration shorter than one step")
        check_estimators(self.estimators)
        if len(self.amplitudes) != 3 or len(self.frequencies) != 3 or len(self.initial_euler) != 3:
            raise ConfigError("amplitudes, frequencies and initial_euler need three values")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.duration / self.dt + 1e-9))

    @classmethod
    def from_values(cls, values: Mapping[str, Any]) -> "ScenarioConfig":
        """Build from a mapping as returned by :func:`rcae.config.load_config`."""
        return cls(
            duration=values["duration"],
            dt=values["dt"],
            amplitudes=tuple(np.radians(values["scenario.amplitudes_deg"])),
            frequencies=tuple(values["scenario.frequencies"]),
            initial_euler=tuple(np.radians(values["scenario.initial_euler_deg"])),
            noise=_config.build_noise(values),
            rcae=_config.build_rcae(values),
            mekf=_config.build_mekf(values),
            estimators=tuple(values["estimators"]),
        )


def check_estimators(names: Sequence[str]) -> None:
    unknown = [n for n in names if n not in ESTIMATORS]
    if unknown or not names:
        raise ConfigError(f"estimators must be a non-empty subset of {ESTIMATORS}, got {tuple(names)}")
    if len(set(names)) != len(names):
        raise ConfigError("estimators listed twice")


class Truth(NamedTuple):
    t: np.ndarray
    omega: np.ndarray
    O: np.ndarray


def generate_truth(cfg: ScenarioConfig) -> Truth:
    """Sample the reference trajectory with a zero-order hold on the rate."""
    n = cfg.n_steps
    t = np.arange(n) * cfg.dt
    omega = np.asarray(cfg.amplitudes) * np.cos(np.outer(t, cfg.frequencies))
    O = np.empty((n, 3, 3))
    O[0] = so3.euler321_to_matrix(cfg.initial_euler)
    for k in range(n - 1):
        O[k + 1] = dead_reckon_step(O[k], omega[k], cfg.dt)
    return Truth(t, omega, O)


def euler_errors(truth, estimate) -> np.ndarray:
    """Absolute per-angle differences wrapped into ``[0, pi]``.

    Works on single ``(psi, theta, phi)`` triples or stacks ``(..., 3)``.
    """
    d = np.asarray(estimate, dtype=float)[..., :3] - np.asarray(truth, dtype=float)[..., :3]
    return np.abs(so3.wrap_angle(d))


def csv_columns(estimators: Sequence[str]) -> list[str]:
    cols = ["t", "psi_true", "theta_true", "phi_true", "psi_meas", "theta_meas", "phi_meas"]
    for name in estimators:
        cols += [f"{name}_psi", f"{name}_theta", f"{name}_phi", f"{name}_z"]
        if name == "rcae":
            cols += [f"rcae_{c}" for c in RCAE_EXTRA]
    return cols


@dataclass
class RunResult:
    """Per-step table (angles in degrees) plus summaries.

    ``euler_err`` maps each estimator, and ``"measurement"``, to an ``(n, 3)``
    array of absolute Euler errors in degrees (NaN where truth is absent).
    ``summary`` holds, per estimator, the mean ``|z|`` and the RMS Euler
    errors over the last quarter of the run.
    """

    columns: list[str]
    data: np.ndarray
    estimators: tuple
    euler_err: dict[str, np.ndarray]
    summary: dict[str, dict[str, Any]]
    errors: list[tuple[str, int, str]] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    wall_time: float = 0.0
    log_records: Optional[list[ImuRecord]] = None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    def __len__(self) -> int:
        return self.data.shape[0]

    def write_csv(self, path) -> None:
        _io.write_table(path, self.columns, self.data)

    def estimator_table(self, name: str) -> tuple[list[str], np.ndarray]:
        """Time, truth and measurement columns, one estimator's columns and its Euler errors."""
        idx = list(range(7)) + [i for i, c in enumerate(self.columns) if c.startswith(name + "_")]
        cols = [self.columns[i] for i in idx] + [f"{name}_e_psi", f"{name}_e_theta", f"{name}_e_phi"]
        return cols, np.column_stack((self.data[:, idx], self.euler_err[name]))

    @property
    def all_failed(self) -> bool:
        failed = {name for name, _, _ in self.errors}
        return failed.issuperset(self.estimators)


class _Sample(NamedTuple):
    t: float
    dt: float
    omega_m: np.ndarray
    O_meas: Optional[np.ndarray]
    e_meas: Optional[np.ndarray]
    accel: Optional[np.ndarray]
    mag: Optional[np.ndarray]
    O_true: Optional[np.ndarray]


class _Runner:
    """Common bookkeeping for one estimator inside a run."""

    name = ""

    def __init__(self):
        self.failed = False

    def estimate(self) -> np.ndarray:
        raise NotImplementedError

    def step(self, s: _Sample) -> list[float]:
        """Consume a sample and return the estimator-specific extra columns."""
        raise NotImplementedError


class _RcaeRunner(_Runner):
    name = "rcae"

    def __init__(self, cfg: RcaeConfig):
        super().__init__()
        self.cfg = cfg
        self.state = RcaeState.initial(cfg)

    def estimate(self):
        return self.state.estimate

    def step(self, s):
        if s.O_meas is None:
            st = self.state
            self.state = RcaeState(
                estimate=dead_reckon_step(st.estimate, s.omega_m, s.dt),
                rls=st.rls,
                gamma=st.gamma,
                z_prev=st.z_prev,
                u_prev=st.u_prev,
                step_index=st.step_index + 1,
            )
            return [math.nan, *self.state.theta, math.nan, math.nan, math.nan]
        self.state, tel = rcae_step(self.state, s.omega_m, s.O_meas, self.cfg, dt=s.dt)
        return [tel.u, *tel.theta, *tel.eta]


class _MekfRunner(_Runner):
    name = "mekf"

    def __init__(self, cfg: MekfConfig):
        super().__init__()
        self.cfg = cfg
        self.state = MekfState.initial(cfg)
        self.posterior = self.state.orientation

    def estimate(self):
        return self.posterior

    def step(self, s):
        st = self.state
        if s.accel is not None:
            st = mekf_update(st, s.accel, s.mag, self.cfg)
        self.posterior = st.orientation
        self.state = mekf_predict(st, s.omega_m, self.cfg, dt=s.dt)
        return []


class _DeadReckonRunner(_Runner):
    name = "dead_reckon"

    def __init__(self, initial: np.ndarray):
        super().__init__()
        self.O = np.array(initial, dtype=float)
        self.steps = 0

    def estimate(self):
        return self.O

    def step(self, s):
        self.O = dead_reckon_step(self.O, s.omega_m, s.dt)
        self.steps += 1
        if self.steps % 1000 == 0:
            self.O = so3.project_to_so3(self.O)
        return []


def _make_runners(estimators: Sequence[str], rcae_cfg: RcaeConfig, mekf_cfg: MekfConfig) -> list[_Runner]:
    runners = []
    for name in estimators:
        if name == "rcae":
            runners.append(_RcaeRunner(rcae_cfg))
        elif name == "mekf":
            runners.append(_MekfRunner(mekf_cfg))
        else:
            runners.append(_DeadReckonRunner(rcae_cfg.initial_estimate))
    return runners


def _execute(samples: Iterable[_Sample], n: int, estimators: Sequence[str], rcae_cfg, mekf_cfg) -> RunResult:
    columns = csv_columns(estimators)
    data = np.full((n, len(columns)), math.nan)
    runners = _make_runners(estimators, rcae_cfg, mekf_cfg)
    errors: list[tuple[str, int, str]] = []
    O_est = {r.name: np.empty((n, 3, 3)) for r in runners}
    O_true = np.full((n, 3, 3), math.nan)
    O_meas = np.full((n, 3, 3), math.nan)
    meas_euler = np.full((n, 3), math.nan)
    extra_at = columns.index("rcae_u") if "rcae" in estimators else None
    t = data[:, 0]

    for k, s in enumerate(samples):
        t[k] = s.t
        if s.O_true is not None:
            O_true[k] = s.O_true
        if s.O_meas is not None:
            O_meas[k] = s.O_meas
            if s.e_meas is not None:
                meas_euler[k] = s.e_meas[:3]
        for r in runners:
            before = r.estimate()
            extra = None
            if not r.failed:
                try:
                    extra = r.step(s)
                except (RcaeError, np.linalg.LinAlgError) as exc:
                    r.failed = True
                    errors.append((r.name, k, str(exc)))
                    log.warning("%s failed at row %d: %s; frozen from here", r.name, k, exc)
            # rcae and dead reckoning report the estimate used at t_k, mekf its posterior
            O_est[r.name][k] = r.estimate() if r.name == "mekf" else before
            if extra_at is not None and r.name == "rcae" and extra is not None:
                data[k, extra_at : extra_at + len(RCAE_EXTRA)] = extra

    true_euler = so3.matrix_to_euler321_array(O_true)
    missing = np.isnan(meas_euler[:, 0])
    meas_euler[missing] = so3.matrix_to_euler321_array(O_meas[missing])
    deg = np.degrees
    data[:, 1:4] = deg(true_euler)
    data[:, 4:7] = deg(meas_euler)
    est_euler = {}
    for name, O in O_est.items():
        i = columns.index(f"{name}_psi")
        est_euler[name] = so3.matrix_to_euler321_array(O)
        data[:, i : i + 3] = deg(est_euler[name])
        data[:, i + 3] = np.einsum("nij,nij->n", O, O_meas) - 3.0

    euler_err = {name: deg(euler_errors(true_euler, e)) for name, e in est_euler.items()}
    euler_err["measurement"] = deg(euler_errors(true_euler, meas_euler))
    start = int(n * (1.0 - STEADY_FRACTION))
    summary = {}
    for name in list(est_euler) + ["measurement"]:
        entry = {"rms_euler_err_deg": _nan_rms(euler_err[name][start:])}
        if name in est_euler:
            entry["mean_abs_z"] = _nan_mean_abs(data[start:, columns.index(f"{name}_z")])
        summary[name] = entry
    return RunResult(columns, data, tuple(estimators), euler_err, summary, errors)


def _nan_mean_abs(x: np.ndarray) -> float:
    x = x[~np.isnan(x)]
    return float(np.mean(np.abs(x))) if x.size else math.nan


def _nan_rms(err: np.ndarray) -> np.ndarray:
    ok = ~np.isnan(err[:, 0])
    if not ok.any():
        return np.full(3, math.nan)
    return np.sqrt(np.mean(err[ok] ** 2, axis=0))


def _record_samples(records, default_dt, O_true=None, e_meas=None, warnings=None):
    """Estimator inputs for each log row; shared by simulation and replay.

    Row ``k`` steps with ``t[k+1] - t[k]`` (the last row repeats the previous
    interval). Rows whose accelerometer/magnetometer pair gives no
    orientation carry no measurement.
    """
    n = len(records)
    times = [r.t for r in records]
    accel = np.array([r.accel for r in records], dtype=float).reshape(n, 3)
    mag = np.array([r.mag for r in records], dtype=float).reshape(n, 3)
    O_meas, ok = orientations_from_accel_mag(accel, mag)
    if warnings is not None:
        warnings.extend(f"row {k}: no measurement (degenerate accelerometer/magnetometer pair)" for k in np.flatnonzero(~ok))
    for k, r in enumerate(records):
        if k + 1 < n:
            dt = times[k + 1] - times[k]
        elif n > 1:
            dt = times[k] - times[k - 1]
        else:
            dt = default_dt
        if O_true is not None:
            Ot = O_true[k]
        elif r.truth_quat is not None and np.all(np.isfinite(r.truth_quat)):
            Ot = so3.quat_to_matrix(so3.quat_normalize(r.truth_quat))
        else:
            Ot = None
        gyro = np.asarray(r.gyro, dtype=float)
        if ok[k]:
            e = None if e_meas is None else e_meas[k]
            yield _Sample(r.t, dt, gyro, O_meas[k], e, accel[k], mag[k], Ot)
        else:
            yield _Sample(r.t, dt, gyro, None, None, None, None, Ot)


def file_exact_gyro(omega) -> np.ndarray:
    """Nearest-by-iteration rate that survives the deg/s log encoding unchanged."""
    g = np.asarray(omega, dtype=float)
    for _ in range(8):
        h = np.radians(np.degrees(g))
        if np.array_equal(h, g):
            break
        g = h
    return g


def simulate_records(cfg: ScenarioConfig, truth: Truth | None = None) -> tuple[list[ImuRecord], np.ndarray]:
    """Noisy sensor log along the reference trajectory.

    Returns the records (accelerometer scaled to ``9.80665``, unit-length
    magnetometer, truth quaternion) and the measured Euler angles, shape
    ``(n, 3)``, from which the vector measurements were built.

    Raises
    ------
    GimbalLockError
        If the true trajectory passes through pitch of +-90 degrees.
    """
    truth = generate_truth(cfg) if truth is None else truth
    n = cfg.n_steps
    rngs = channel_rngs(cfg.noise.seed)
    gyro_noise = rngs["gyro"].standard_normal((n, 3))
    euler_noise = rngs["orientation"].standard_normal((n, 3))
    omega_m = file_exact_gyro(apply_gyro_noise(truth.omega, cfg.noise, gyro_noise))
    e_true = so3.matrix_to_euler321_array(truth.O)
    locked = np.flatnonzero(np.abs(truth.O[:, 0, 2]) > 1.0 - so3.GIMBAL_TOL)
    if locked.size:
        raise GimbalLockError(f"true orientation is at gimbal lock at step {locked[0]}")
    e_meas = perturb_euler_array(e_true, cfg.noise, euler_noise)
    O_meas = so3.euler321_to_matrix_array(e_meas)
    accel = GRAVITY * (O_meas @ cfg.mekf.ref_gravity)
    mag = O_meas @ cfg.mekf.ref_mag
    records = [
        ImuRecord(truth.t[k], omega_m[k], accel[k], mag[k], so3.matrix_to_quat(truth.O[k])) for k in range(n)
    ]
    return records, e_meas


def run_scenario(cfg: ScenarioConfig, keep_log: bool = False) -> RunResult:
    """Simulate the noisy sensors along the reference trajectory and run the estimators.

    The estimators consume the synthetic log exactly as :func:`replay_log`
    would, so exporting it with ``keep_log`` and replaying the file
    reproduces every estimator column. Truth and measured Euler columns come
    from the simulation itself.
    """
    t0 = time.perf_counter()
    truth = generate_truth(cfg)
    records, e_meas = simulate_records(cfg, truth)
    samples = _record_samples(records, cfg.dt, truth.O, e_meas)
    result = _execute(samples, cfg.n_steps, cfg.estimators, cfg.rcae, cfg.mekf)
    result.wall_time = time.perf_counter() - t0
    if keep_log:
        result.log_records = records
    return result


def check_records(records: Sequence[ImuRecord]) -> list[str]:
    """Validate time stamps and gyro samples; return warnings for gaps."""
    if not records:
        raise MalformedRecordError(0, "log is empty")
    for i, r in enumerate(records):
        if not np.isfinite(r.t):
            raise MalformedRecordError(i, "non-finite time stamp")
        if not np.all(np.isfinite(r.gyro)):
            raise MalformedRecordError(i, "non-finite gyro sample")
        if i and not r.t > records[i - 1].t:
            raise MalformedRecordError(i, f"time {r.t!r} not after previous {records[i - 1].t!r}")
    warnings = []
    if len(records) > 2:
        dts = np.diff([r.t for r in records])
        med = float(np.median(dts))
        for i in np.flatnonzero(dts > GAP_FACTOR * med):
            warnings.append(f"gap of {dts[i]:.6g} s before row {i + 1} (median dt {med:.6g} s)")
    return warnings


def replay_log(
    records: Sequence[ImuRecord],
    rcae_cfg: RcaeConfig | None = None,
    mekf_cfg: MekfConfig | None = None,
    estimators: Sequence[str] = ESTIMATORS,
) -> RunResult:
    """Run the estimators over a recorded log.

    The measured orientation at each row comes from the accelerometer and
    magnetometer; rows where that fails (NaN, zero or parallel vectors) are
    propagated with the gyro only. The step length of row ``k`` is
    ``t[k+1] - t[k]`` (the last row reuses the previous one).

    Raises
    ------
    MalformedRecordError
        For an empty log, non-finite time or gyro values, or time stamps that
        do not increase.
    """
    t0 = time.perf_counter()
    rcae_cfg = rcae_cfg or RcaeConfig()
    mekf_cfg = mekf_cfg or MekfConfig()
    check_estimators(tuple(estimators))
    warnings = check_records(records)
    for w in warnings:
        log.warning(w)
    samples = _record_samples(records, rcae_cfg.dt, None, None, warnings)
    result = _execute(samples, len(records), tuple(estimators), rcae_cfg, mekf_cfg)
    result.warnings = warnings
    result.wall_time = time.perf_counter() - t0
    return result


def summary_table(result: RunResult) -> str:
    """Plain-text table of the final-quarter metrics."""
    lines = [f"{'estimator':<12} {'mean|z|':>12} {'rms e_psi':>10} {'rms e_theta':>11} {'rms e_phi':>10}  (deg)"]
    for name, entry in result.summary.items():
        z = entry.get("mean_abs_z", math.nan)
        e = entry["rms_euler_err_deg"]
        lines.append(f"{name:<12} {z:>12.6g} {e[0]:>10.4f} {e[1]:>11.4f} {e[2]:>10.4f}")
    for name, row, msg in result.errors:
        lines.append(f"# {name} failed at row {row}: {msg}")
    return "\n".join(lines) + "\n"
