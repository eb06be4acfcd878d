"""Closed-form product kernel against trapezoid quadrature of the convolution integral.

For each grid resolution, reports the worst relative error over the config's
evaluation points.
"""
import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from weylheat import heat_kernel, heat_matrices, product_kernel, product_matrices
from weylheat.config import load_config
from weylheat.kernels import evaluate_many
from weylheat.quadrature import QuadratureSpec, convolve_numeric


@dataclass
class Settings:
    config: str = "product2d"
    resolutions: list[int] = field(default_factory=lambda: [8, 10, 12, 14, 16, 20, 40, 200])


def run(cfg: Settings, out) -> None:
    pr = load_config(cfg.config)
    if pr.n > 3:
        raise SystemExit("quadrature convergence is only practical for n <= 3")
    plus = heat_matrices(pr.t[0], pr.g_plus, pr.R_plus)
    minus = heat_matrices(pr.s[0], pr.g_minus, pr.R_minus)
    K = product_kernel(product_matrices(plus, minus))
    xs, ys = [p[0] for p in pr.eval_points], [p[1] for p in pr.eval_points]
    closed = evaluate_many(K, xs, ys)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["points_per_axis", "max_rel_err"])
    for m in cfg.resolutions:
        quad = convolve_numeric(heat_kernel(plus), heat_kernel(minus), pr.eval_points,
                                QuadratureSpec(pr.n, "trapezoid-box", m))
        err = max(abs(c - q) / abs(c) for c, q in zip(closed, quad))
        w.writerow([m, f"{err:.3e}"])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=Settings.config)
    p.add_argument("--resolutions", type=int, nargs="+")
    p.add_argument("--out")
    a = p.parse_args()
    cfg = Settings(a.config) if a.resolutions is None else Settings(a.config, a.resolutions)
    if a.out:
        with open(a.out, "w") as fh:
            run(cfg, fh)
    else:
        run(cfg, sys.stdout)


if __name__ == "__main__":
    main()
