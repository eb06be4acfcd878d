"""Tensor-grid quadrature oracles.

Everything here integrates numerically and never calls the closed-form
convolution or product formulas it is used to check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .curvature import as_curvature, as_metric, canonical_decompose, phi
from .errors import DivergenceError, DomainError, ValidationError
from .kernels import GaussianKernel, evaluate_many, heat_kernel
from .semigroup import heat_matrices

MAX_DIM = 3
MAX_NODES = 10 ** 7


@dataclass(frozen=True)
class QuadratureSpec:
    n: int
    rule: str = "gauss-hermite"
    points_per_axis: int = 40
    box_halfwidth: float | None = None  # in units of the Gaussian width; default 12

    def __post_init__(self):
        if not 1 <= self.n <= MAX_DIM:
            raise ValidationError(f"quadrature dimension must be 1..{MAX_DIM}, got {self.n}")
        if self.rule not in ("gauss-hermite", "trapezoid-box"):
            raise ValidationError(f"unknown quadrature rule {self.rule!r}")
        if self.points_per_axis < 8:
            raise ValidationError("points_per_axis must be at least 8")
        if (2 * self.points_per_axis) ** self.n > MAX_NODES:
            raise ValidationError(
                f"{self.points_per_axis} points per axis in {self.n} dimensions exceeds {MAX_NODES} nodes")

    def refined(self) -> "QuadratureSpec":
        return QuadratureSpec(self.n, self.rule, 2 * self.points_per_axis, self.box_halfwidth)


@dataclass(frozen=True)
class AverageResult:
    value: complex
    error_estimate: float


def _tensor_nodes(nodes1d: np.ndarray, weights1d: np.ndarray, n: int):
    grids = np.meshgrid(*([nodes1d] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wgrid = np.meshgrid(*([weights1d] * n), indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in wgrid], axis=1), axis=1)
    return pts, w


def _standard_rule(spec: QuadratureSpec):
    """Nodes/weights integrating against ``pi^{-n/2} exp(-|u|^2)``."""
    if spec.rule == "gauss-hermite":
        u, wu = np.polynomial.hermite.hermgauss(spec.points_per_axis)
        wu = wu / math.sqrt(math.pi)
    else:
        L = spec.box_halfwidth or 12.0
        u = np.linspace(-L / math.sqrt(2), L / math.sqrt(2), spec.points_per_axis)
        h = u[1] - u[0]
        wu = np.exp(-u ** 2) * h / math.sqrt(math.pi)
        wu[[0, -1]] *= 0.5
    return _tensor_nodes(u, wu, spec.n)


def _plain_rule(spec: QuadratureSpec):
    """Nodes/weights for ``int g(u) du`` with ``g`` decaying like ``exp(-|u|^2)``."""
    if spec.rule == "gauss-hermite":
        u, wu = np.polynomial.hermite.hermgauss(spec.points_per_axis)
        wu = wu * np.exp(u ** 2)
    else:
        L = spec.box_halfwidth or 12.0
        u = np.linspace(-L / math.sqrt(2), L / math.sqrt(2), spec.points_per_axis)
        wu = np.full(spec.points_per_axis, u[1] - u[0])
        wu[[0, -1]] *= 0.5
    return _tensor_nodes(u, wu, spec.n)


def _average_once(f, gamma, t, spec):
    u, w = _standard_rule(spec)
    wg, Vg = np.linalg.eigh(gamma)
    # xi = 2 sqrt(t) gamma^{-1/2} u maps the weight exp(-<xi,gamma xi>/4t) to exp(-|u|^2)
    S = 2.0 * math.sqrt(t) * (Vg * wg ** -0.5) @ Vg.T
    xi = u @ S.T
    vals = np.asarray(f(xi), dtype=complex)
    return complex(np.sum(w * vals))


def gauss_average(f: Callable[[np.ndarray], np.ndarray], gamma, t: float,
                  spec: QuadratureSpec | None = None) -> AverageResult:
    """``<f>_t = (4 pi t)^{-n/2} det(gamma)^{1/2} int exp(-<xi, gamma xi>/4t) f(xi) dxi``.

    ``f`` receives an ``(m, n)`` array of nodes and returns ``m`` values.  The
    error estimate is the change under doubling the nodes per axis.
    """
    gamma = as_metric(gamma, name="gamma")
    if not t > 0:
        raise ValidationError(f"t must be positive, got {t!r}")
    spec = spec or QuadratureSpec(gamma.shape[0])
    if spec.n != gamma.shape[0]:
        raise ValidationError("quadrature dimension does not match gamma")
    coarse = _average_once(f, gamma, t, spec)
    fine = _average_once(f, gamma, t, spec.refined())
    return AverageResult(value=fine, error_estimate=abs(fine - coarse))


def _perfect_matchings(items: Sequence[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        pair = (first, rest[k])
        for m in _perfect_matchings(rest[:k] + rest[k + 1:]):
            yield [pair] + m


def moment_oracle(multi_index: Sequence[int], gamma, t: float) -> float:
    """Closed-form ``<xi^{i_1} ... xi^{i_2k}>_t = (2k)!/k! t^k gamma^{(i_1 i_2} ... gamma^{i_{2k-1} i_{2k})}``.

    ``multi_index`` is an exponent vector.  The symmetrisation over (2k)!
    orderings collapses to a sum over the (2k-1)!! pairings, each counted
    2^k k! times.
    """
    gamma = as_metric(gamma, name="gamma")
    alpha = [int(a) for a in multi_index]
    if len(alpha) != gamma.shape[0] or min(alpha) < 0:
        raise ValidationError(f"bad exponent vector {multi_index!r} for dimension {gamma.shape[0]}")
    idx = [i for i, a in enumerate(alpha) for _ in range(a)]
    if len(idx) % 2:
        return 0.0
    k = len(idx) // 2
    ginv = np.linalg.inv(gamma)
    total = sum(math.prod(ginv[a, b] for a, b in m) for m in _perfect_matchings(idx))
    n_orderings = math.factorial(2 * k)
    sym = total * (2 ** k * math.factorial(k)) / n_orderings
    return float(math.factorial(2 * k) / math.factorial(k) * t ** k * sym)


def k_kernel(t: float, gamma, R, x, xp) -> complex:
    """Integral kernel of the Gaussian average of ``exp<xi, nabla>``."""
    gamma = as_metric(gamma, name="gamma")
    R = as_curvature(R)
    x = np.asarray(x, float)
    xp = np.asarray(xp, float)
    n = len(gamma)
    d = x - xp
    pref = (4 * math.pi * t) ** (-n / 2) * math.sqrt(np.linalg.det(gamma))
    return complex(pref * np.exp(-(d @ gamma @ d) / (4 * t) + 0.5j * (x @ R @ xp)))


def shifted_action(R, xi, f: Callable[[np.ndarray], np.ndarray], x) -> np.ndarray:
    """``(exp<xi, nabla> f)(x) = exp(-1/2 <xi, iR x>) f(x + xi)`` at rows of ``x``."""
    R = np.asarray(R, float)
    xi = np.asarray(xi, float)
    x = np.atleast_2d(np.asarray(x, float))
    return np.exp(-0.5j * (x @ R.T @ xi)) * f(x + xi)


def small_field_check(t: float, gamma, R, points) -> float:
    """Max relative error between the K-kernel and ``det(I + t gamma^{-1} iR)^{-1/2} exp(t Delta_{G(t)})``.

    ``G(t)^{-1} = Phi(t gamma^{-1} iR) gamma^{-1}``; the right side is built
    from the heat-kernel machinery with metric ``G(t)``.
    """
    gamma = as_metric(gamma, name="gamma")
    R = as_curvature(R)
    canon = canonical_decompose(gamma, R)
    for b in canon.blocks:
        if abs(t * b.B) >= 1:
            raise DomainError(f"|t B| = {abs(t * b.B):.3g} >= 1: tanh^-1 is singular")
    Phi = canon.spectral(complex(phi(np.asarray(0.0))), [complex(phi(np.asarray(t * b.B))) for b in canon.blocks])
    Ginv = (Phi @ np.linalg.inv(gamma)).real
    G = np.linalg.inv(0.5 * (Ginv + Ginv.T))
    # det(I + t gamma^{-1} iR) = prod_a (1 - t^2 B_a^2)^mult
    det_pref = math.prod((1 - (t * b.B) ** 2) ** (-0.5 * b.mult) for b in canon.blocks)
    K = heat_kernel(heat_matrices(t, 0.5 * (G + G.T), R))
    worst = 0.0
    for x, xp in points:
        closed = k_kernel(t, gamma, R, x, xp)
        other = det_pref * evaluate_many(K, [x], [xp])[0]
        worst = max(worst, abs(other - closed) / abs(closed))
    return worst


def _y_form(K: GaussianKernel, Kp: GaussianKernel):
    M = K.Bq + Kp.A
    ReM = 0.5 * (M + M.T).real
    w = np.linalg.eigvalsh(ReM)
    if w.min() <= 0:
        raise DivergenceError("integrand does not decay: Re(B + A') is not positive definite")
    return M, ReM


def convolve_numeric(K: GaussianKernel, Kp: GaussianKernel, pairs, spec: QuadratureSpec | None = None,
                     with_error: bool = False):
    """``int dy K(x, y) K'(y, z)`` by tensor quadrature, for each ``(x, z)`` in ``pairs``.

    Nodes are centred on the maximum of the integrand modulus and scaled by the
    decay width of its real quadratic part; the integrand itself is evaluated
    only through :func:`evaluate_many`.
    """
    n = K.n
    spec = spec or QuadratureSpec(n, "trapezoid-box", 200)
    M, ReM = _y_form(K, Kp)
    wM, VM = np.linalg.eigh(ReM)
    # |integrand| ~ exp(-<y, ReM y>/4 + ...): unit-variance coordinates u = ReM^{1/2} y / 2
    to_y = 2.0 * (VM * wM ** -0.5) @ VM.T
    results, errors = [], []
    for x, z in pairs:
        x = np.asarray(x, float)
        z = np.asarray(z, float)
        lin = 0.5 * (K.C.T @ x + Kp.C @ z + K.w + Kp.v).real
        centre = np.linalg.solve(0.5 * ReM, lin)
        vals = []
        for sp in (spec, spec.refined()):
            u, wu = _plain_rule(sp)
            y = centre + u @ to_y.T
            jac = abs(np.linalg.det(to_y))
            X = np.broadcast_to(x, y.shape)
            Zp = np.broadcast_to(z, y.shape)
            integrand = evaluate_many(K, X, y) * evaluate_many(Kp, y, Zp)
            vals.append(complex(np.sum(wu * integrand) * jac))
        results.append(vals[1])
        errors.append(abs(vals[1] - vals[0]))
    if with_error:
        return results, errors
    return results


def box_integral(f: Callable[[np.ndarray], np.ndarray], centre, halfwidth: float, points_per_axis: int) -> complex:
    """Trapezoid rule on the cube ``centre +- halfwidth``; for rapidly decaying integrands."""
    centre = np.atleast_1d(np.asarray(centre, float))
    n = len(centre)
    if n > MAX_DIM or points_per_axis ** n > MAX_NODES:
        raise ValidationError("box quadrature exceeds the resource guard")
    u = np.linspace(-halfwidth, halfwidth, points_per_axis)
    h = u[1] - u[0]
    wu = np.full(points_per_axis, h)
    wu[[0, -1]] *= 0.5
    pts, w = _tensor_nodes(u, wu, n)
    return complex(np.sum(w * np.asarray(f(pts + centre), complex)))


def unitarity_check(xi, R, width: float = 1.0, centre=None, points_per_axis: int = 160) -> float:
    """Relative L^2 discrepancy ``| ||exp<xi,nabla> f||^2 - ||f||^2 | / ||f||^2`` for a Gaussian ``f``."""
    R = as_curvature(R)
    xi = np.asarray(xi, float)
    n = len(xi)
    c = np.zeros(n) if centre is None else np.asarray(centre, float)

    def f(x):
        return np.exp(-np.sum((x - c) ** 2, axis=1) / (2 * width ** 2) + 0.3j * x.sum(axis=1))

    mid = c - 0.5 * xi
    half = 10 * width + 0.5 * np.abs(xi).max()
    norm_f = box_integral(lambda x: np.abs(f(x)) ** 2, mid, half, points_per_axis).real
    norm_g = box_integral(lambda x: np.abs(shifted_action(R, xi, f, x)) ** 2, mid, half, points_per_axis).real
    return abs(norm_g - norm_f) / norm_f


def gaussian_integral_closed(gamma, A) -> complex:
    """``int exp(-<xi, gamma xi>/4 + <A, xi>) dxi = (4 pi)^{n/2} det(gamma)^{-1/2} exp<A, gamma^{-1} A>``."""
    gamma = np.asarray(gamma)
    A = np.asarray(A)
    n = len(A)
    return complex((4 * math.pi) ** (n / 2) / np.sqrt(np.linalg.det(gamma) + 0j)
                   * np.exp(A @ np.linalg.solve(gamma, A)))


# interface name used by external callers
lemma3_check = small_field_check
