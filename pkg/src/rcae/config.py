"""Flat ``key = value`` configuration files.

Lines are ``key = value``; ``#`` starts a comment; vector values are comma
separated. Section prefixes (``rcae.``, ``mekf.``, ...) are part of the key.
Angles and rates are given in degrees here and converted to radians when the
configuration objects are built. Every key defaults to the reference
simulation, so an empty file reproduces it.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import so3
from .errors import ConfigError
from .estimator import RcaeConfig
from .mekf import MekfConfig, default_ref_mag
from .rls import FirFilter, RlsConfig
from .sensors import NoiseModel

DEFAULTS: dict[str, Any] = {
    "duration": 20.0,
    "dt": 0.01,
    "seed": 0,
    "estimators": ("rcae", "mekf", "dead_reckon"),
    "scenario.amplitudes_deg": (80.0, 60.0, 40.0),
    "scenario.frequencies": (5.0, 7.0, 9.0),
    "scenario.initial_euler_deg": (30.0, 20.0, 10.0),
    "noise.gyro_bias_deg": (5.0, 7.0, 4.0),
    "noise.gyro_sigma_deg": 2.0,
    "noise.euler_sigma_deg": 5.0,
    "rcae.p0_scale": 0.1,
    "rcae.theta0": (0.0, 0.0, 0.0),
    "rcae.rz": 1.0,
    "rcae.ru": 0.0,
    "rcae.lambda": 1.0,
    "rcae.filter": (1.0,),
    "rcae.gamma_limit": 100.0,
    "rcae.initial_euler_deg": (0.0, 0.0, 0.0),
    "rcae.reproject_every": 1000,
    "mekf.p0": 1e4,
    "mekf.q_attitude": 1e-4,
    "mekf.q_bias": 1.0,
    "mekf.r_gravity": 0.01,
    "mekf.r_mag": 100.0,
    "mekf.dip_deg": 60.0,
    "mekf.initial_euler_deg": (0.0, 0.0, 0.0),
    "mekf.initial_bias_deg": (0.0, 0.0, 0.0),
}


def _coerce(key: str, raw: str) -> Any:
    default = DEFAULTS[key]
    try:
        if isinstance(default, tuple):
            parts = [p.strip() for p in raw.split(",") if p.strip()]
            if default and isinstance(default[0], str):
                return tuple(parts)
            return tuple(float(p) for p in parts)
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from exc


def parse_config_text(text: str, source: str = "<string>") -> dict[str, Any]:
    """Parse config text into a complete key -> value mapping."""
    values = dict(DEFAULTS)
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path: str | Path | None) -> dict[str, Any]:
    if path is None:
        return dict(DEFAULTS)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text, str(path))


def format_config(values: Mapping[str, Any]) -> str:
    lines = []
    for key in DEFAULTS:
        v = values[key]
        if isinstance(v, tuple):
            v = ", ".join(str(x) for x in v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def _vec3(values, key) -> tuple:
    v = values[key]
    if len(v) != 3:
        raise ConfigError(f"{key} needs three values, got {len(v)}")
    return v


def build_noise(values: Mapping[str, Any]) -> NoiseModel:
    return NoiseModel(
        gyro_bias=tuple(np.radians(_vec3(values, "noise.gyro_bias_deg"))),
        gyro_sigma=math.radians(values["noise.gyro_sigma_deg"]),
        euler_sigma=math.radians(values["noise.euler_sigma_deg"]),
        seed=int(values["seed"]),
    )


def build_rcae(values: Mapping[str, Any]) -> RcaeConfig:
    rls = RlsConfig(
        l_theta=3,
        p0_scale=values["rcae.p0_scale"],
        theta0=_vec3(values, "rcae.theta0"),
        rz=values["rcae.rz"],
        ru=values["rcae.ru"],
        filter=FirFilter(values["rcae.filter"]),
        lam=values["rcae.lambda"],
    )
    return RcaeConfig(
        dt=values["dt"],
        rls=rls,
        gamma_limit=values["rcae.gamma_limit"],
        initial_estimate=so3.euler321_to_matrix(np.radians(_vec3(values, "rcae.initial_euler_deg"))),
        reproject_every=int(values["rcae.reproject_every"]),
    )


def build_mekf(values: Mapping[str, Any]) -> MekfConfig:
    qa, qb = values["mekf.q_attitude"], values["mekf.q_bias"]
    ra, rm = values["mekf.r_gravity"], values["mekf.r_mag"]
    O0 = so3.euler321_to_matrix(np.radians(_vec3(values, "mekf.initial_euler_deg")))
    return MekfConfig(
        dt=values["dt"],
        Q=np.diag([qa] * 3 + [qb] * 3),
        R=np.diag([ra] * 3 + [rm] * 3),
        P0=values["mekf.p0"] * np.eye(6),
        ref_mag=default_ref_mag(values["mekf.dip_deg"]),
        initial_quat=so3.matrix_to_quat(O0),
        initial_bias=np.radians(_vec3(values, "mekf.initial_bias_deg")),
    )
