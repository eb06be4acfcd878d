"""Relative deviation of Omega(t) t^(n/2) from sqrt(det g) and of t D(t) from g as t -> 0.

Writes a CSV table (one row per t) to stdout or --out.
"""
import argparse
import csv
import math
import sys
from dataclasses import dataclass

import numpy as np

from weylheat import heat_matrices
from weylheat.config import load_config


@dataclass
class Settings:
    config: str = "landau2d"
    t_min: float = 1e-6
    t_max: float = 1.0
    steps: int = 13


def run(cfg: Settings, out) -> None:
    problem = load_config(cfg.config)
    g, R, n = problem.g_plus, problem.R_plus, problem.n
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "omega_rel_dev", "D_rel_dev"])
    for t in np.geomspace(cfg.t_min, cfg.t_max, cfg.steps):
        hd = heat_matrices(t, g, R)
        omega_dev = abs(hd.Omega * t ** (n / 2) / math.sqrt(np.linalg.det(g)) - 1)
        d_dev = np.abs(hd.D * t - g).max() / np.abs(g).max()
        w.writerow([f"{t:.3e}", f"{omega_dev:.3e}", f"{d_dev:.3e}"])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=Settings.config)
    p.add_argument("--t-min", type=float, default=Settings.t_min)
    p.add_argument("--t-max", type=float, default=Settings.t_max)
    p.add_argument("--steps", type=int, default=Settings.steps)
    p.add_argument("--out")
    a = p.parse_args()
    cfg = Settings(a.config, a.t_min, a.t_max, a.steps)
    if a.out:
        with open(a.out, "w") as fh:
            run(cfg, fh)
    else:
        run(cfg, sys.stdout)


if __name__ == "__main__":
    main()
