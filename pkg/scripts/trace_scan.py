"""Combined trace of exp(t L+) exp(s L-) over a (t, s) grid, as CSV for external plotting."""
import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from weylheat import product_from_config, trace_product
from weylheat.config import load_config


@dataclass
class Settings:
    config: str = "product2d"
    t_max: float = 3.0
    steps: int = 12


def run(cfg: Settings, out) -> None:
    pr = load_config(cfg.config)
    grid = np.linspace(cfg.t_max / cfg.steps, cfg.t_max, cfg.steps)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "s", "finite", "trace_re", "trace_im", "rank", "per_volume_re"])
    for t in grid:
        for s in grid:
            pd = product_from_config(t, s, pr.g_plus, pr.R_plus, pr.g_minus, pr.R_minus, with_metric=False)
            tr = trace_product(pd)
            value = tr.value if tr.finite else complex("nan")
            w.writerow([f"{t:.4f}", f"{s:.4f}", int(tr.finite), repr(value.real), repr(value.imag),
                        tr.rank, repr(tr.per_volume.real)])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=Settings.config)
    p.add_argument("--t-max", type=float, default=Settings.t_max)
    p.add_argument("--steps", type=int, default=Settings.steps)
    p.add_argument("--out")
    a = p.parse_args()
    cfg = Settings(a.config, a.t_max, a.steps)
    if a.out:
        with open(a.out, "w") as fh:
            run(cfg, fh)
    else:
        run(cfg, sys.stdout)


if __name__ == "__main__":
    main()
