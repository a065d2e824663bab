#!/usr/bin/env python3
"""Run the sampler-comparison experiment and print the per-seed result table.

Re-runs configs/sampler_comparison.yaml (all three samplers, ten seeds)
and tabulates the final suboptimality of each run, plus the win count of
reshuffling over with-replacement sampling.
"""

import csv
import subprocess
import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
CONFIG = REPO / "configs" / "sampler_comparison.yaml"
OUT = REPO / "out" / "sampler_comparison"


def final_subopt(path: Path) -> float:
    with path.open() as fh:
        rows = list(csv.DictReader(fh))
    return float(rows[-1]["subopt"])


def main() -> int:
    rc = subprocess.call(
        [sys.executable, "-m", "dpgrr.cli", "run", "--config", str(CONFIG), "-q"],
        cwd=REPO,
    )
    if rc != 0:
        return rc
    seeds = range(1, 11)
    table = {
        algo: [final_subopt(OUT / f"{algo}_seed{s}_metrics.csv") for s in seeds]
        for algo in ("dpg_rr", "dpg_sg", "dpg_ig")
    }
    print(f"{'seed':>4}  {'dpg-rr':>12}  {'dpg-sg':>12}  {'dpg-ig':>12}")
    for i, s in enumerate(seeds):
        print(
            f"{s:>4}  {table['dpg_rr'][i]:>12.6f}  {table['dpg_sg'][i]:>12.6f}  "
            f"{table['dpg_ig'][i]:>12.6f}"
        )
    wins = sum(a <= b for a, b in zip(table["dpg_rr"], table["dpg_sg"]))
    print(f"\nreshuffling <= with-replacement in {wins}/10 seeds")
    print(
        f"medians: rr={np.median(table['dpg_rr']):.6f} "
        f"sg={np.median(table['dpg_sg']):.6f} ig={np.median(table['dpg_ig']):.6f}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
