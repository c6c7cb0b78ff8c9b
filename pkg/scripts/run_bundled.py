#!/usr/bin/env python3
"""Run every bundled experiment config and print a summary table.

Usage: python scripts/run_bundled.py [--out DIR]
"""

import argparse
import glob
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from haarrect.harness import ExperimentConfig, run_experiment  # noqa: E402

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out")
    args = parser.parse_args()
    os.makedirs(args.out, exist_ok=True)

    rows = []
    for path in sorted(glob.glob(os.path.join(CONFIG_DIR, "*.json"))):
        name = os.path.basename(path)
        if name == "holo_bench.json":
            continue
        config = ExperimentConfig.from_json(path)
        report, code = run_experiment(config, out_dir=args.out)
        rows.append((name, code, report.iterations, report.initial_defect,
                     report.final_defect, report.error or "-"))

    print(f"{'config':<26}{'exit':<6}{'iters':<7}{'initial':<12}{'final':<12}error")
    for name, code, iters, d0, dn, err in rows:
        d0s = f"{d0:.3e}" if d0 == d0 else "-"
        dns = f"{dn:.3e}" if dn == dn else "-"
        print(f"{name:<26}{code:<6}{iters:<7}{d0s:<12}{dns:<12}{err}")
    return 0 if all(code in (0, 2) for _, code, *_ in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
