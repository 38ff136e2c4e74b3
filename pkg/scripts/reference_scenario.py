"""Run the reference scenario, write its CSV and print the summary table.

    python3 scripts/reference_scenario.py [out.csv] [--seed N]
"""

import argparse
from pathlib import Path

from rcae.harness import ScenarioConfig, run_scenario, summary_table
from rcae.sensors import NoiseModel


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out", nargs="?", type=Path, default=Path("scenario.csv"))
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    result = run_scenario(ScenarioConfig(noise=NoiseModel.reference(args.seed)))
    result.write_csv(args.out)
    print(summary_table(result), end="")
    print(f"# {len(result)} steps in {result.wall_time:.3f} s -> {args.out}")


if __name__ == "__main__":
    main()
