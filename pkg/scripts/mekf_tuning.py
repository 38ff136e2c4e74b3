"""MEKF bias-estimate error on the reference scenario for a few noise tunings.

    python3 scripts/mekf_tuning.py
"""

import numpy as np

from rcae.harness import ScenarioConfig, simulate_records
from rcae.mekf import MekfConfig, MekfState, mekf_predict, mekf_update

TRUE_BIAS_DEG = np.array([5.0, 7.0, 4.0])
TUNINGS = {
    "default (Q_b 1, R_m 100)": MekfConfig(),
    "R_m 0.01": MekfConfig(R=np.diag([0.01] * 6)),
    "Q_b 1e-6": MekfConfig(Q=np.diag([1e-4] * 3 + [1e-6] * 3)),
    "Q_b 1e-6, R_m 0.01": MekfConfig(Q=np.diag([1e-4] * 3 + [1e-6] * 3), R=np.diag([0.01] * 6)),
}


def bias_track(records, cfg: MekfConfig) -> np.ndarray:
    s = MekfState.initial(cfg)
    out = np.empty((len(records), 3))
    for k, r in enumerate(records):
        s = mekf_update(s, r.accel, r.mag, cfg)
        out[k] = s.bias
        s = mekf_predict(s, r.gyro, cfg)
    return np.degrees(out)


def main() -> None:
    records, _ = simulate_records(ScenarioConfig())
    start = int(0.75 * len(records))
    print(f"{'tuning':<22} worst final-quarter |bias error| per axis (deg/s)")
    for name, cfg in TUNINGS.items():
        err = np.abs(bias_track(records, cfg)[start:] - TRUE_BIAS_DEG).max(axis=0)
        print(f"{name:<22} {np.round(err, 2).tolist()}")


if __name__ == "__main__":
    main()
