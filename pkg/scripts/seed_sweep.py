"""Final-quarter RCAE and dead-reckoning metrics over a range of noise seeds.

    python3 scripts/seed_sweep.py [--seeds 20]
"""

import argparse

import numpy as np

from rcae.harness import ScenarioConfig, run_scenario
from rcae.sensors import NoiseModel


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, default=20)
    args = p.parse_args()
    print(f"{'seed':>4} {'rcae mean|z|':>13} {'dr mean|z|':>11}  rcae RMS psi/theta/phi (deg)")
    worst = []
    for seed in range(args.seeds):
        cfg = ScenarioConfig(noise=NoiseModel.reference(seed), estimators=("rcae", "dead_reckon"))
        s = run_scenario(cfg).summary
        rms = s["rcae"]["rms_euler_err_deg"]
        worst.append(rms.max())
        print(f"{seed:>4} {s['rcae']['mean_abs_z']:>13.4g} {s['dead_reckon']['mean_abs_z']:>11.4g}  {np.round(rms, 2).tolist()}")
    worst = np.array(worst)
    print(f"# seeds with every RCAE RMS below 5 deg: {(worst < 5).sum()} of {len(worst)}")


if __name__ == "__main__":
    main()
