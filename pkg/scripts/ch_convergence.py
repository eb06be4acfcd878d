"""Campbell-Hausdorff product: residual and quadrature error against matrix size and node count."""
import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from weylheat.ch import ch_product
from weylheat.errors import MethodFailure


@dataclass
class Settings:
    dim: int = 3
    norms: list[float] = field(default_factory=lambda: [0.05, 0.2, 0.5, 1.0, 1.5])
    quad_points: list[int] = field(default_factory=lambda: [8, 16, 32, 64])
    seed: int = 0


def run(cfg: Settings, out) -> None:
    rng = np.random.default_rng(cfg.seed)
    P0, X0 = rng.normal(size=(cfg.dim, cfg.dim)), rng.normal(size=(cfg.dim, cfg.dim))
    P0 /= np.linalg.norm(P0, 2)
    X0 /= np.linalg.norm(X0, 2)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["norm", "quad_points", "residual", "quad_error"])
    for r in cfg.norms:
        for q in cfg.quad_points:
            try:
                res = ch_product(r * P0, r * X0, quad_points=q)
                w.writerow([r, q, f"{res.residual:.3e}", f"{res.quad_error:.3e}"])
            except MethodFailure:
                w.writerow([r, q, "diverged", ""])


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--dim", type=int, default=Settings.dim)
    p.add_argument("--seed", type=int, default=Settings.seed)
    p.add_argument("--out")
    a = p.parse_args()
    cfg = Settings(dim=a.dim, seed=a.seed)
    if a.out:
        with open(a.out, "w") as fh:
            run(cfg, fh)
    else:
        run(cfg, sys.stdout)


if __name__ == "__main__":
    main()
