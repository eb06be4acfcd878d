"""Verification suites: every closed form against an independent oracle.

Each check returns one or more :class:`Record`.  Checks are independent and
seeded from ``(seed, check name)``, so they can run in any order or in
parallel and still give byte-identical reports.
"""
from __future__ import annotations

import json
import math
import platform
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import metadata, resources
from typing import Callable

import numpy as np

from . import ch, weyl
from .config import ProblemConfig
from .kernels import (convolve, evaluate_many, heat_kernel, max_field_difference, product_kernel,
                      sigma_kernel, trace_product)
from .quadrature import (QuadratureSpec, box_integral, convolve_numeric, gauss_average,
                         gaussian_integral_closed, small_field_check, moment_oracle, unitarity_check)
from .semigroup import (equal_operator_projector, heat_matrices, det_identity_residual,
                        omega_tilde_residual, product_matrices, tilde_F)

SCHEMA = 1
SUITES = ("gauss", "kernels", "weyl", "ch", "product")


def _refs() -> dict[str, str]:
    text = resources.files("weylheat").joinpath("configs", "check_refs.json").read_text()
    return json.loads(text)


def _num(x):
    """JSON-friendly number: complex as ``[re, im]``, NaN as ``None``."""
    if x is None:
        return None
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return _num(x.real)
        return [_num(x.real), _num(x.imag)]
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class Record:
    name: str
    paper_ref: str
    computed: object
    oracle: object
    abs_err: float
    rel_err: float
    tolerance: float
    compare: str  # which error is held against the tolerance: "abs" or "rel"

    @property
    def passed(self) -> bool:
        err = self.rel_err if self.compare == "rel" else self.abs_err
        return bool(err <= self.tolerance)  # NaN fails

    def to_dict(self) -> dict:
        return {"name": self.name, "paper_ref": self.paper_ref, "computed": _num(self.computed),
                "oracle": _num(self.oracle), "abs_err": _num(self.abs_err), "rel_err": _num(self.rel_err),
                "tolerance": self.tolerance, "compare": self.compare, "pass": self.passed}


class Context:
    def __init__(self, cfg: ProblemConfig, seed: int, points_per_axis: int | None):
        self.cfg = cfg
        self.seed = seed
        self.ppa = points_per_axis or cfg.points_per_axis
        self.refs = _refs()

    def rng(self, name: str) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(name.encode())])

    def _ref(self, name: str) -> str:
        key = name
        while key not in self.refs and "." in key:
            key = key.rsplit(".", 1)[0]
        return self.refs.get(key, "")

    def value(self, name: str, computed, oracle, tol: float, compare: str = "rel") -> Record:
        abs_err = float(abs(complex(computed) - complex(oracle)))
        scale = abs(complex(oracle))
        rel_err = abs_err / scale if scale > 0 else (0.0 if abs_err == 0 else math.inf)
        return Record(name, self._ref(name), computed, oracle, abs_err, rel_err,
                      self.cfg.tolerance(name, tol), compare)

    def residual(self, name: str, residual: float, tol: float) -> Record:
        r = float(residual)
        return Record(name, self._ref(name), r, 0.0, r, r, self.cfg.tolerance(name, tol), "abs")


# -- gauss ------------------------------------------------------------------------

def _gauss_checks(ctx: Context) -> list[Record]:
    cfg = ctx.cfg
    if cfg.n > 3:
        return []
    gamma, t, n = cfg.g_plus, cfg.t[0], cfg.n
    spec = QuadratureSpec(n, "gauss-hermite", 24)
    out = []
    indices = [(2,) + (0,) * (n - 1), (4,) + (0,) * (n - 1), (3,) + (0,) * (n - 1)]
    if n > 1:
        indices += [(1, 1) + (0,) * (n - 2), (2, 2) + (0,) * (n - 2), (3, 1) + (0,) * (n - 2)]
    for alpha in indices:
        oracle = moment_oracle(alpha, gamma, t)
        avg = gauss_average(lambda x, a=alpha: np.prod(x ** np.array(a), axis=1), gamma, t, spec)
        label = "".join(map(str, alpha))
        if oracle == 0.0:
            out.append(ctx.residual(f"gauss.moment.{label}", abs(avg.value), 1e-8))
        else:
            out.append(ctx.value(f"gauss.moment.{label}", avg.value, oracle, 1e-8))

    p = np.zeros(n)
    p[0] = 1.0
    avg = gauss_average(lambda x: np.exp(1j * x @ p), gamma, t, QuadratureSpec(n, "gauss-hermite", 40))
    out.append(ctx.value("gauss.characteristic_function", avg.value,
                         math.exp(-t * p @ np.linalg.solve(gamma, p)), 1e-8))

    f0 = lambda x: np.cos(x.sum(axis=1)) + np.exp(-0.5 * (x ** 2).sum(axis=1))
    avg = gauss_average(f0, gamma, 1e-8, spec)
    out.append(ctx.value("gauss.small_time_limit", avg.value, 2.0, 1e-6, compare="abs"))

    a = np.arange(1, n + 1, dtype=float)
    ginv = np.linalg.inv(gamma)
    f = lambda x: (x @ a) ** 4
    lap_f = lambda x: 12 * (a @ ginv @ a) * (x @ a) ** 2
    h = 1e-4
    dt = (gauss_average(f, gamma, t + h, spec).value - gauss_average(f, gamma, t - h, spec).value) / (2 * h)
    rhs = gauss_average(lap_f, gamma, t, spec)
    out.append(ctx.value("gauss.heat_equation", dt, rhs.value, max(1e-6, 10 * rhs.error_estimate)))

    rng = ctx.rng("gauss.gaussian_integral")
    L = rng.normal(size=(n, n))
    gam = L @ L.T + n * np.eye(n)
    A = 0.3 * rng.normal(size=n)
    centre = 2 * np.linalg.solve(gam, A)
    half = 14.0 / math.sqrt(np.linalg.eigvalsh(gam).min())
    quad = box_integral(lambda x: np.exp(-np.einsum("pi,ij,pj->p", x, gam, x) / 4 + x @ A),
                        centre, half, {1: 400, 2: 300, 3: 80}[n])
    out.append(ctx.value("gauss.gaussian_integral", quad, gaussian_integral_closed(gam, A), 1e-8))
    return out


# -- kernels ----------------------------------------------------------------------

def _kernel_checks(ctx: Context) -> list[Record]:
    cfg = ctx.cfg
    out = []
    t, s = cfg.t[0], cfg.s[0]
    for sign, g, R in (("plus", cfg.g_plus, cfg.R_plus), ("minus", cfg.g_minus, cfg.R_minus)):
        hd = heat_matrices(t, g, R)
        out.append(ctx.residual(f"kernels.det_identity.{sign}", det_identity_residual(hd), 1e-8))
        small = heat_matrices(1e-5, g, R)
        out.append(ctx.value(f"kernels.small_time_omega.{sign}", small.Omega * 1e-5 ** (cfg.n / 2),
                             math.sqrt(np.linalg.det(g)), 1e-3))
        out.append(ctx.residual(f"kernels.small_time_D.{sign}",
                                np.abs(small.D * 1e-5 - g).max() / np.abs(g).max(), 1e-3))
        lhs = convolve(heat_kernel(hd), heat_kernel(heat_matrices(s, g, R)))
        rhs = heat_kernel(heat_matrices(t + s, g, R))
        out.append(ctx.residual(f"kernels.semigroup.{sign}", max_field_difference(lhs, rhs), 1e-10))

    g, R = cfg.g_plus, cfg.R_plus
    hd = heat_matrices(t, g, R)
    if not np.any(R):
        K = heat_kernel(hd)
        pts = np.array([p[0] for p in cfg.eval_points]), np.array([p[1] for p in cfg.eval_points])
        ref = [complex((4 * math.pi * t) ** (-cfg.n / 2) * math.sqrt(np.linalg.det(g))
                       * math.exp(-(np.subtract(x, y) @ g @ np.subtract(x, y)) / (4 * t)))
               for x, y in zip(*pts)]
        vals = evaluate_many(K, *pts)
        worst = max(abs(v - r) / abs(r) for v, r in zip(vals, ref))
        out.append(ctx.residual("kernels.free_heat_kernel", worst, 1e-12))

    rng = ctx.rng("kernels.small_field")
    pts = [(rng.normal(size=cfg.n), rng.normal(size=cfg.n)) for _ in range(5)]
    out.append(ctx.residual("kernels.small_field", small_field_check(cfg.small_field_t, g, R, pts), 1e-9))

    if cfg.n <= 3:
        sig = convolve_numeric(sigma_kernel(g), sigma_kernel(g), [cfg.eval_points[0]],
                               QuadratureSpec(cfg.n, "gauss-hermite", 40))[0]
        x, y = cfg.eval_points[0]
        closed = evaluate_many(sigma_kernel(g / 2), [x], [y])[0]
        out.append(ctx.value("kernels.sigma_convolution", sig, closed, 1e-10))

        xi = np.ones(cfg.n)
        ppa = {1: 400, 2: 160, 3: 60}[cfg.n]
        out.append(ctx.residual("kernels.unitarity", unitarity_check(xi, R, points_per_axis=ppa), 1e-10))
    return out


# -- weyl -------------------------------------------------------------------------

def _weyl_checks(ctx: Context) -> list[Record]:
    cfg = ctx.cfg
    mode = cfg.precision or weyl.default_precision()
    tol = 0.0 if mode == "exact" else 1e-10
    deg = cfg.weyl_degree
    out = [ctx.residual("weyl.nabla_commutators",
                        weyl.tilde_basis_residual(cfg.R_plus, cfg.R_minus, deg, mode), tol)]
    lap = weyl.laplacian_commutator_residual(cfg.g_plus, cfg.g_minus, cfg.R_plus, deg, mode)
    out.append(ctx.residual("weyl.laplacian_commutator", lap["residual"], tol))
    xo = weyl.x_operator_check(cfg.R_plus, cfg.R_minus, deg, mode)
    out.append(ctx.residual("weyl.x_operator_basis", xo["all"], tol))
    return out


# -- ch ---------------------------------------------------------------------------

def _unit_random(rng, shape, size):
    M = rng.normal(size=shape)
    return M * (size / np.linalg.norm(M, 2))


def _ch_checks(ctx: Context) -> list[Record]:
    cfg = ctx.cfg
    out = []
    rng = ctx.rng("ch.dexp")
    Q, V = _unit_random(rng, (3, 3), 0.5), _unit_random(rng, (3, 3), 0.5)
    for d in ("left", "right"):
        err = np.abs(ch.dexp_factor(Q, V, d) - ch.dexp_finite_difference(Q, V, d)).max()
        out.append(ctx.residual(f"ch.dexp.{d}", err, 1e-8))

    rng = ctx.rng("ch.product")
    P, X = _unit_random(rng, (3, 3), 0.05), _unit_random(rng, (3, 3), 0.05)
    out.append(ctx.residual("ch.product", ch.ch_product(P, X).residual, 1e-10))

    z = np.linspace(0.2, 1.8, 33)
    out.append(ctx.residual("ch.psi_series", np.abs(ch.psi_series(z) - ch.psi_closed(z)).max(), 1e-13))

    F = tilde_F(cfg.R_plus, cfg.R_minus)
    Ftilde = F if np.any(F) else np.array([[0.0, 1.0], [-1.0, 0.0]])
    rep = ch.build_nilpotent_rep(Ftilde)
    m = 2 * rep.n
    rng = ctx.rng("ch.nilpotent")
    xi, eta = rng.normal(size=m), rng.normal(size=m)
    out.append(ctx.residual("ch.nilpotent.structure", ch.rep_structure_residual(rep), 0.0))
    A, B = rep.element(xi), rep.element(eta)
    sc = ch.special_ch(A, B)
    out.append(ctx.residual("ch.special", max(sc.residual, sc.swap_residual), 1e-12))
    cp = ch.ch_product(A, B)
    out.append(ctx.residual("ch.product_vs_special", np.abs(ch.expm(cp.V) - sc.value).max(), 1e-12))
    out.append(ctx.residual("ch.shift_identity", ch.shift_identity_residual(rep, xi, eta), 1e-14))
    out.append(ctx.residual("ch.derivative_identity", ch.derivative_identity_residual(rep, xi), 0.0))
    out.append(ctx.residual("ch.dexp.nilpotent", ch.nilpotent_dexp_residual(rep, xi, eta), 1e-14))
    return out


# -- product ----------------------------------------------------------------------

def _product_checks(ctx: Context) -> list[Record]:
    cfg = ctx.cfg
    t, s = cfg.t[0], cfg.s[0]
    plus, minus = heat_matrices(t, cfg.g_plus, cfg.R_plus), heat_matrices(s, cfg.g_minus, cfg.R_minus)
    pd = product_matrices(plus, minus)
    K = product_kernel(pd)
    out = [ctx.residual("product.identities", max(pd.residuals.values()), 1e-9),
           ctx.residual("product.group_law", max_field_difference(K, convolve(heat_kernel(plus),
                                                                           heat_kernel(minus))), 1e-10),
           ctx.residual("product.omega_tilde", omega_tilde_residual(pd), 1e-8)]

    if cfg.n <= 3:
        spec = QuadratureSpec(cfg.n, "trapezoid-box", ctx.ppa)
        quad = convolve_numeric(heat_kernel(plus), heat_kernel(minus), cfg.eval_points, spec)
        closed = evaluate_many(K, [p[0] for p in cfg.eval_points], [p[1] for p in cfg.eval_points])
        for i, (q, c) in enumerate(zip(quad, closed)):
            out.append(ctx.value(f"product.quadrature.{i:02d}", c, q, 1e-6))

    tr = trace_product(pd)
    if tr.finite:
        if cfg.n <= 3:
            ReM = 0.5 * (tr.M + tr.M.T).real
            half = math.sqrt(80.0 / np.linalg.eigvalsh(ReM).min())
            diag = box_integral(lambda x: evaluate_many(K, x, x), np.zeros(cfg.n), half,
                                {1: 800, 2: 400, 3: 100}[cfg.n])
            out.append(ctx.value("product.trace", tr.value, diag, 1e-6))
    else:
        smallest = float(np.abs(np.linalg.eigvals(tr.M)).min())
        out.append(ctx.residual("product.trace_divergence", smallest, 1e-10))

    if cfg.equal_operators:
        joint = heat_kernel(heat_matrices(t + s, cfg.g_plus, cfg.R_plus))
        out.append(ctx.residual("product.equal_operator.kernel", max_field_difference(K, joint), 1e-10))
        n = cfg.n
        G = pd.Gtilde_inv
        block_sum = G[:n, :n] + G[:n, n:] + G[n:, :n] + G[n:, n:]
        out.append(ctx.residual("product.equal_operator.metric",
                                np.abs(block_sum - (t + s) * np.eye(n)).max() / (t + s), 1e-10))
        worst = 0.0
        for b in plus.canon.blocks:
            Pi, c = equal_operator_projector(t, s, b.B)
            worst = max(worst, np.abs(Pi @ Pi - Pi).max(), abs(c - math.tanh((t + s) * b.B)))
        out.append(ctx.residual("product.equal_operator.projector", worst, 1e-12))
    return out


SUITE_CHECKS: dict[str, Callable[[Context], list[Record]]] = {
    "gauss": _gauss_checks,
    "kernels": _kernel_checks,
    "weyl": _weyl_checks,
    "ch": _ch_checks,
    "product": _product_checks,
}


def _version() -> str:
    try:
        return metadata.version("weylheat")
    except metadata.PackageNotFoundError:
        return "unknown"


def run_suite(cfg: ProblemConfig, suite: str = "all", seed: int = 0,
              points_per_axis: int | None = None, workers: int = 4) -> dict:
    """Run one suite (or ``all``) and return the report as a JSON-ready dict."""
    names = SUITES if suite == "all" else (suite,)
    unknown = [s for s in names if s not in SUITE_CHECKS]
    if unknown:
        raise ValueError(f"unknown suite {suite!r}; choose from {SUITES + ('all',)}")
    ctx = Context(cfg, seed, points_per_axis)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        batches = list(ex.map(lambda name: SUITE_CHECKS[name](ctx), names))
    records = sorted((r for batch in batches for r in batch), key=lambda r: r.name)
    passed = sum(r.passed for r in records)
    return {
        "schema": SCHEMA,
        "config": cfg.name,
        "suite": suite,
        "records": [r.to_dict() for r in records],
        "summary": {"total": len(records), "passed": passed, "failed": len(records) - passed,
                    "failing": [r.name for r in records if not r.passed]},
        "environment": {"version": _version(), "precision": cfg.precision or weyl.default_precision(),
                        "seed": seed, "points_per_axis": ctx.ppa, "python": platform.python_version(),
                        "numpy": np.__version__},
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timestamp"}
