"""``weylheat`` command line front end.

Exit codes: 0 success / all checks pass, 1 a verification check failed,
2 bad input, 3 a numerical method failed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from itertools import product as cartesian

import numpy as np

from . import verify
from .config import ProblemConfig, load_config
from .curvature import canonical_decompose
from .errors import DivergenceError, DomainError, MethodFailure, ValidationError
from .kernels import KernelValueGrid, evaluate_grid, heat_kernel, product_kernel, trace_product
from .semigroup import heat_matrices, product_matrices

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_METHOD = 0, 1, 2, 3


def _pairs(M) -> list:
    """Complex matrix or vector as nested ``[re, im]`` pairs."""
    M = np.asarray(M, complex)
    if M.ndim == 0:
        return [M.real.item(), M.imag.item()]
    return [_pairs(row) for row in M]


def cmd_canon(cfg: ProblemConfig) -> dict:
    out = {}
    for sign, g, R in (("plus", cfg.g_plus, cfg.R_plus), ("minus", cfg.g_minus, cfg.R_minus)):
        cf = canonical_decompose(g, R)
        out[sign] = {"n": cf.n, "rank": cf.rank, "omega": cf.omega.tolist(),
                     "blocks": [{"B": b.B, "mult": b.mult, "P": b.P.tolist(), "E": _pairs(b.E)}
                                for b in cf.blocks]}
        if cfg.equal_operators:
            break
    return out


def _grid_rows(cfg: ProblemConfig, times, build) -> list[dict]:
    rows = []
    for tt in times:
        K = build(*tt)
        grid = evaluate_grid(K, cfg.eval_points)
        for (x, y), v in zip(grid.points, grid.values):
            rows.append({"t": list(tt), "x": x, "y": y, "value": [v.real, v.imag]})
    return rows


def cmd_kernel(cfg: ProblemConfig) -> dict:
    rows = _grid_rows(cfg, [(t,) for t in cfg.t],
                      lambda t: heat_kernel(heat_matrices(t, cfg.g_plus, cfg.R_plus)))
    return {"kind": "heat_kernel", "n": cfg.n, "values": rows}


def cmd_product(cfg: ProblemConfig) -> dict:
    entries = []
    for t, s in cartesian(cfg.t, cfg.s):
        pd = product_matrices(heat_matrices(t, cfg.g_plus, cfg.R_plus),
                              heat_matrices(s, cfg.g_minus, cfg.R_minus))
        K = product_kernel(pd)
        grid: KernelValueGrid = evaluate_grid(K, cfg.eval_points)
        tr = trace_product(pd)
        trace = ({"finite": True, "value": [tr.value.real, tr.value.imag]} if tr.finite else
                 {"finite": False, "divergence": {"rank": tr.rank, "dimension": pd.n,
                                                  "per_volume": [tr.per_volume.real, tr.per_volume.imag]}})
        entries.append({
            "t": t, "s": s,
            "D": pd.Dts.real.tolist(), "H": _pairs(pd.H), "A_plus": _pairs(pd.Aplus),
            "A_minus": _pairs(pd.Aminus), "B": _pairs(pd.Bmat), "Omega": pd.Omega_ts,
            "residuals": pd.residuals, "kernel": K.to_json_dict(), "trace": trace,
            "values": [{"x": x, "y": y, "value": [v.real, v.imag]} for (x, y), v in zip(grid.points, grid.values)],
        })
    return {"kind": "product", "n": cfg.n, "entries": entries}


def rows_to_csv(rows: list[dict]) -> str:
    """Flatten kernel rows; floats are written with ``repr`` so they re-parse exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if not rows:
        return ""
    nt, n = len(rows[0]["t"]), len(rows[0]["x"])
    w.writerow([f"t{i}" for i in range(nt)] + [f"x{i}" for i in range(n)] + [f"y{i}" for i in range(n)]
               + ["re", "im"])
    for r in rows:
        w.writerow([repr(float(v)) for v in [*r["t"], *r["x"], *r["y"], *r["value"]]])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[dict]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    nt = sum(h.startswith("t") for h in header)
    n = sum(h.startswith("x") for h in header)
    rows = []
    for rec in reader:
        vals = [float(v) for v in rec]
        rows.append({"t": vals[:nt], "x": vals[nt:nt + n], "y": vals[nt + n:nt + 2 * n],
                     "value": vals[nt + 2 * n:]})
    return rows


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylheat", description="Heat semigroups of magnetic Laplacians.")
    p.add_argument("command", choices=["canon", "kernel", "product", "verify"])
    p.add_argument("--config", default=None, help="TOML/JSON config or a bundled name (default product2d)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--suite", default="all", choices=list(verify.SUITES) + ["all"])
    p.add_argument("--points-per-axis", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.points_per_axis is not None and args.points_per_axis < 8:
            raise ValidationError("--points-per-axis must be at least 8")
        if args.command == "verify":
            report = verify.run_suite(cfg, args.suite, seed=args.seed, points_per_axis=args.points_per_axis)
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
            sys.stdout.write(text)
            if args.out:
                _emit(text, args.out)
            for name in report["summary"]["failing"]:
                print(f"FAILED: {name}", file=sys.stderr)
            return EXIT_OK if report["summary"]["failed"] == 0 else EXIT_FAIL

        result = {"canon": cmd_canon, "kernel": cmd_kernel, "product": cmd_product}[args.command](cfg)
        if args.format == "csv":
            if args.command != "kernel":
                raise ValidationError("CSV output is only available for the kernel command")
            _emit(rows_to_csv(result["values"]), args.out)
        else:
            _emit(json.dumps(result, indent=2, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    except ValidationError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MethodFailure, DomainError, DivergenceError) as exc:
        print(f"method failure: {exc}", file=sys.stderr)
        return EXIT_METHOD


if __name__ == "__main__":
    sys.exit(main())
