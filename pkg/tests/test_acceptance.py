"""End-to-end acceptance run: twelve criteria, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -s`` (or ``python3 tests/test_acceptance.py``)
to see the summary lines.
"""
import math
import time

import numpy as np
import pytest

from weylheat import ch, weyl
from weylheat.kernels import (convolve, evaluate_many, heat_kernel, max_field_difference,
                              product_kernel, trace_product)
from weylheat.quadrature import (QuadratureSpec, box_integral, convolve_numeric, gauss_average, small_field_check,
                                 moment_oracle)
from weylheat.semigroup import (equal_operator_projector, heat_matrices, omega_tilde_residual,
                                product_matrices)

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
INSTANCES = 50


def metric(rng, n):
    L = rng.normal(size=(n, n))
    return L @ L.T / n + np.eye(n)


def curvature(rng, n, scale=1.5):
    A = rng.normal(size=(n, n))
    return scale * (A - A.T) / 2


def dyadic_curvature(rng, n):
    A = rng.integers(-6, 7, size=(n, n)) / 4
    return A - A.T


def c01_det_identity():
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(INSTANCES):
        n = (2, 4, 6)[k % 3]
        hd = heat_matrices(rng.uniform(0.1, 2.0), metric(rng, n), curvature(rng, n))
        worst = max(worst, abs(np.linalg.det(hd.D + 1j * hd.R) - hd.Omega ** 2) / hd.Omega ** 2)
    return worst <= 1e-8, f"max rel err {worst:.2e} (tol 1e-8, {INSTANCES} instances)"


def c02_product_vs_quadrature():
    t, s = 0.7, 0.4
    plus, minus = heat_matrices(t, np.eye(2), J), heat_matrices(s, np.eye(2), -0.5 * J)
    K = product_kernel(product_matrices(plus, minus))
    pairs = [((0.0, 0.0), (0.0, 0.0)), ((0.3, -0.2), (0.1, 0.4)), ((1.0, 0.0), (0.0, 1.0)),
             ((-0.5, 0.7), (0.6, -0.3)), ((1.2, 1.1), (-0.9, 0.8))]
    quad = convolve_numeric(heat_kernel(plus), heat_kernel(minus), pairs,
                            QuadratureSpec(2, "trapezoid-box", 200))
    closed = evaluate_many(K, [p[0] for p in pairs], [p[1] for p in pairs])
    worst = max(abs(c - q) / abs(q) for c, q in zip(closed, quad))
    return worst <= 1e-6, f"max rel err {worst:.2e} (tol 1e-6, 5 pairs, 200 points/axis)"


def c03_group_law():
    rng = np.random.default_rng(303)
    worst = 0.0
    for k in range(INSTANCES):
        n = 1 + k % 4
        t, s = rng.uniform(0.1, 2.0, size=2)
        plus = heat_matrices(t, metric(rng, n), curvature(rng, n))
        minus = heat_matrices(s, metric(rng, n), curvature(rng, n))
        K = product_kernel(product_matrices(plus, minus))
        worst = max(worst, max_field_difference(K, convolve(heat_kernel(plus), heat_kernel(minus))))
    return worst <= 1e-10, f"max field diff {worst:.2e} (tol 1e-10, {INSTANCES} instances n<=4)"


def c04_semigroup():
    rng = np.random.default_rng(404)
    worst = 0.0
    for k in range(INSTANCES):
        n = 1 + k % 4
        g, R = metric(rng, n), curvature(rng, n)
        t, s = rng.uniform(0.1, 2.0, size=2)
        lhs = convolve(heat_kernel(heat_matrices(t, g, R)), heat_kernel(heat_matrices(s, g, R)))
        worst = max(worst, max_field_difference(lhs, heat_kernel(heat_matrices(t + s, g, R))))
    return worst <= 1e-10, f"max field diff {worst:.2e} (tol 1e-10, {INSTANCES} instances)"


def c05_equal_operator():
    rng = np.random.default_rng(505)
    t, s = 0.7, 0.4
    g, R = np.eye(2), 1.3 * J
    pd = product_matrices(heat_matrices(t, g, R), heat_matrices(s, g, R))
    joint = heat_kernel(heat_matrices(t + s, g, R))
    X, Y = rng.normal(size=(10, 2)), rng.normal(size=(10, 2))
    a, b = evaluate_many(product_kernel(pd), X, Y), evaluate_many(joint, X, Y)
    value_err = float(np.max(np.abs(a - b) / np.abs(b)))
    field_err = max_field_difference(product_kernel(pd), joint)
    Pi, _ = equal_operator_projector(t, s, 1.3)
    idem = float(np.abs(Pi @ Pi - Pi).max())
    ok = value_err <= 1e-10 and field_err <= 1e-10 and idem <= 1e-12
    return ok, f"values {value_err:.2e}, fields {field_err:.2e} (tol 1e-10); projector {idem:.2e} (tol 1e-12)"


def c06_omega_tilde():
    rng = np.random.default_rng(606)
    worst = 0.0
    for k in range(INSTANCES):
        n = 1 + k % 4
        t, s = rng.uniform(0.1, 2.0, size=2)
        pd = product_matrices(heat_matrices(t, metric(rng, n), curvature(rng, n)),
                              heat_matrices(s, metric(rng, n), curvature(rng, n)), with_metric=False)
        worst = max(worst, omega_tilde_residual(pd))
    return worst <= 1e-8, f"max rel err {worst:.2e} (tol 1e-8, {INSTANCES} instances)"


def c07_weyl_exact():
    rng = np.random.default_rng(707)
    worst = {}
    for n in (2, 3, 4):
        Rp, Rm = dyadic_curvature(rng, n), dyadic_curvature(rng, n)
        worst[f"nabla n={n}"] = weyl.tilde_basis_residual(Rp, Rm, 6, "exact")
        worst[f"x-basis n={n}"] = weyl.x_operator_check(Rp, Rm, 6, "exact")["all"]
    gp = np.diag([1.0, 2.0, 0.5, 1.0]) + 0.25 * (np.ones((4, 4)) - np.eye(4))
    gm = np.eye(4) + 0.5 * np.diag([1.0, 0.0, 1.0, 0.0])
    R = dyadic_curvature(rng, 4)
    worst["laplacian n=4"] = weyl.laplacian_commutator_residual(gp, gm, R, 6, "exact")["residual"]
    bad = {k: v for k, v in worst.items() if v != 0}
    return not bad, ("all residuals exactly 0 (n<=4, degree 6)" if not bad else f"nonzero: {bad}")


def c08_ch():
    rng = np.random.default_rng(808)
    special = 0.0
    for n in (1, 2, 3):
        F = rng.normal(size=(2 * n, 2 * n))
        rep = ch.build_nilpotent_rep(F - F.T)
        for _ in range(5):
            r = ch.special_ch(rep.element(rng.normal(size=2 * n)), rep.element(rng.normal(size=2 * n)))
            special = max(special, r.residual, r.swap_residual)
    prod = 0.0
    for _ in range(20):
        P, X = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        P *= 0.05 / np.linalg.norm(P, 2)
        X *= 0.05 / np.linalg.norm(X, 2)
        prod = max(prod, ch.ch_product(P, X, quad_points=32).residual)
    fd = 0.0
    for _ in range(10):
        Q, V = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
        Q *= 0.5 / np.linalg.norm(Q, 2)
        for d in ("left", "right"):
            fd = max(fd, float(np.abs(ch.dexp_factor(Q, V, d) - ch.dexp_finite_difference(Q, V, d)).max()))
    ok = special <= 1e-12 and prod <= 1e-10 and fd <= 1e-8
    return ok, f"special {special:.2e} (1e-12), product {prod:.2e} (1e-10), dexp fd {fd:.2e} (1e-8)"


def c09_small_field():
    rng = np.random.default_rng(909)
    pts = [(rng.normal(size=2), rng.normal(size=2)) for _ in range(10)]
    err = small_field_check(0.3, np.eye(2), J, pts)
    return err <= 1e-9, f"max rel err {err:.2e} (tol 1e-9, t=0.3, B=1)"


def c10_gauss():
    gamma = np.array([[2.0, 0.3], [0.3, 1.0]])
    t = 0.6
    spec = QuadratureSpec(2, "gauss-hermite", 24)
    moment = 0.0
    for alpha in [(2, 0), (0, 2), (1, 1), (4, 0), (2, 2), (3, 1), (0, 6)]:
        avg = gauss_average(lambda x, a=alpha: np.prod(x ** np.array(a), axis=1), gamma, t, spec).value
        oracle = moment_oracle(alpha, gamma, t)
        moment = max(moment, abs(avg - oracle) / abs(oracle))
    p = np.array([0.7, -1.1])
    cf = gauss_average(lambda x: np.exp(1j * x @ p), gamma, t, QuadratureSpec(2, "gauss-hermite", 40)).value
    cf_oracle = math.exp(-t * p @ np.linalg.solve(gamma, p))
    cf_err = abs(cf - cf_oracle) / cf_oracle
    f = lambda x: np.cos(x.sum(axis=1)) * np.exp(-0.5 * (x ** 2).sum(axis=1))
    limit = abs(gauss_average(f, gamma, 1e-8, spec).value - 1.0)
    ok = moment <= 1e-8 and cf_err <= 1e-8 and limit <= 1e-6
    return ok, f"moments {moment:.2e} (1e-8), char fn {cf_err:.2e} (1e-8), t->0 limit {limit:.2e} (1e-6)"


def c11_trace():
    t, s = 0.7, 0.4
    pd = product_matrices(heat_matrices(t, np.eye(2), J), heat_matrices(s, np.eye(2), -0.5 * J))
    tr = trace_product(pd)
    K = product_kernel(pd)
    half = math.sqrt(80.0 / np.linalg.eigvalsh(0.5 * (tr.M + tr.M.T).real).min())
    diag = box_integral(lambda x: evaluate_many(K, x, x), np.zeros(2), half, 400)
    err = abs(tr.value - diag) / abs(diag) if tr.finite else math.inf
    flat = []
    R3 = np.zeros((3, 3))
    R3[0, 1], R3[1, 0] = 1.0, -1.0
    for g, Rp, Rm in [(np.eye(1), np.zeros((1, 1)), np.zeros((1, 1))),
                      (np.eye(2), np.zeros((2, 2)), np.zeros((2, 2))),
                      (np.eye(3), R3, R3)]:
        n = g.shape[0]
        res = trace_product(product_matrices(heat_matrices(t, g, Rp), heat_matrices(s, g, Rm)))
        flat.append(not res.finite and res.value is None and res.rank < n)
    ok = err <= 1e-6 and all(flat)
    return ok, f"finite trace rel err {err:.2e} (tol 1e-6); divergence reported in {sum(flat)}/{len(flat)} flat cases"


def c12_small_time():
    rng = np.random.default_rng(1212)
    worst_omega = worst_D = 0.0
    t = 1e-5
    for k in range(10):
        n = 2 + k % 3
        g, R = metric(rng, n), curvature(rng, n)
        hd = heat_matrices(t, g, R)
        worst_omega = max(worst_omega, abs(hd.Omega * t ** (n / 2) / math.sqrt(np.linalg.det(g)) - 1))
        worst_D = max(worst_D, float(np.abs(hd.D * t - g).max() / np.abs(g).max()))
    ok = worst_omega <= 1e-3 and worst_D <= 1e-3
    return ok, f"Omega t^(n/2) {worst_omega:.2e}, D t {worst_D:.2e} (tol 1e-3, t=1e-5)"


CRITERIA = [
    (1, "determinant identity", c01_det_identity),
    (2, "product kernel vs quadrature", c02_product_vs_quadrature),
    (3, "product kernel vs group law", c03_group_law),
    (4, "semigroup property", c04_semigroup),
    (5, "equal-operator collapse", c05_equal_operator),
    (6, "normalisation factorisation", c06_omega_tilde),
    (7, "Weyl-algebra exactness", c07_weyl_exact),
    (8, "Campbell-Hausdorff suite", c08_ch),
    (9, "small-field closed form", c09_small_field),
    (10, "Gaussian-average oracles", c10_gauss),
    (11, "combined trace", c11_trace),
    (12, "small-time asymptotics", c12_small_time),
]


def run_criterion(number, label, fn):
    start = time.perf_counter()
    ok, detail = fn()
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {label}: {detail} [{time.perf_counter() - start:.1f}s]"
    return ok, line


@pytest.mark.parametrize("number, label, fn", CRITERIA, ids=[f"c{n:02d}" for n, _, _ in CRITERIA])
def test_criterion(number, label, fn, capsys):
    ok, line = run_criterion(number, label, fn)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [run_criterion(*c) for c in CRITERIA]
    for _, line in results:
        print(line)
    raise SystemExit(0 if all(ok for ok, _ in results) else 1)
