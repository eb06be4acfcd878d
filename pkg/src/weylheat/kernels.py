"""Gaussian kernels on R^n x R^n and their convolution semigroup.

A kernel is ``U(x, y) = c exp(-S(x, y))`` with

    S = 1/4 <x,Ax> - 1/2 <x,Cy> + 1/4 <y,By> - 1/2 <v,x> - 1/2 <w,y> + r,

and normalisation ``c = det(C/4pi)^{1/2}``.  The square-root branch is not
fixed by the formula, so every kernel carries its prefactor explicitly:
heat and product kernels get the positive block-product value, convolution
propagates it through the Gaussian integral (whose ``det^{-1/2}`` has a
canonical branch because the y-quadratic form has positive real part), and
only hand-built kernels fall back to the principal root.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DivergenceError, ValidationError
from .semigroup import HeatData, ProductData

ADMISSIBLE_FLOOR = -1e-10
SYM_TOL = 1e-12


def sqrt_det(M: np.ndarray) -> complex:
    """``det(M)^{1/2}`` as the product of principal roots of the eigenvalues.

    This is the analytic continuation from positive definite matrices and is
    unambiguous whenever the spectrum avoids the negative real axis.
    """
    lam = np.linalg.eigvals(np.asarray(M, dtype=complex))
    return complex(np.prod(np.sqrt(lam)))


@dataclass(frozen=True)
class GaussianKernel:
    A: np.ndarray
    Bq: np.ndarray
    C: np.ndarray
    v: np.ndarray = None
    w: np.ndarray = None
    r: complex = 0.0
    prefactor: complex | None = None

    def __post_init__(self):
        A = np.asarray(self.A)
        n = A.shape[0]
        as_c = lambda a: np.asarray(a, dtype=complex) if np.iscomplexobj(a) else np.asarray(a, dtype=float)
        object.__setattr__(self, "A", as_c(self.A))
        object.__setattr__(self, "Bq", as_c(self.Bq))
        object.__setattr__(self, "C", np.asarray(self.C, dtype=complex))
        for name in ("v", "w"):
            val = getattr(self, name)
            object.__setattr__(self, name, np.zeros(n, complex) if val is None else np.asarray(val, complex))
        object.__setattr__(self, "r", complex(self.r))
        for name in ("A", "Bq", "C"):
            if getattr(self, name).shape != (n, n):
                raise ValidationError(f"kernel field {name} has shape {getattr(self, name).shape}, expected {(n, n)}")
        for name in ("v", "w"):
            if getattr(self, name).shape != (n,):
                raise ValidationError(f"kernel field {name} has shape {getattr(self, name).shape}, expected {(n,)}")
        for name in ("A", "Bq"):
            M = getattr(self, name)
            if np.abs(M - M.T).max() > SYM_TOL * max(1.0, np.abs(M).max()):
                raise ValidationError(f"kernel field {name} is not symmetric")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def stacked(self) -> np.ndarray:
        return np.block([[self.A, -self.C], [-self.C.T, self.Bq]])

    def is_admissible(self, floor: float = ADMISSIBLE_FLOOR) -> bool:
        """``Re [[A, -C], [-C^T, B]] >= 0`` up to ``floor``."""
        ReA = self.stacked().real
        return bool(np.linalg.eigvalsh(0.5 * (ReA + ReA.T)).min() >= floor * max(1.0, np.abs(ReA).max()))

    def contraction_norm(self) -> float:
        """``||D^{-1} Re C E^{-1}||_2`` with ``A = D^2``, ``B = E^2``; at most 1 for admissible kernels."""
        def inv_sqrt(M):
            w, V = np.linalg.eigh(0.5 * (M + M.T).real)
            return (V * w ** -0.5) @ V.T
        L = inv_sqrt(self.A) @ self.C.real @ inv_sqrt(self.Bq)
        return float(np.linalg.norm(L, 2))

    def norm_factor(self) -> complex:
        if self.prefactor is not None:
            return complex(self.prefactor)
        if np.linalg.matrix_rank(self.C) < self.n:
            raise ValidationError("C is singular; the det(C/4pi)^{1/2} prefactor is undefined")
        return complex(np.sqrt(np.linalg.det(self.C / (4 * np.pi)) + 0j))

    def exponent(self, x, y) -> complex:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return (0.25 * x @ self.A @ x - 0.5 * x @ self.C @ y + 0.25 * y @ self.Bq @ y
                - 0.5 * self.v @ x - 0.5 * self.w @ y + self.r)

    def fields(self) -> dict:
        return {"A": self.A, "Bq": self.Bq, "C": self.C, "v": self.v, "w": self.w, "r": self.r}

    # -- serialisation -------------------------------------------------------

    def to_json_dict(self) -> dict:
        out = {"n": self.n, "A": np.real(self.A).tolist(), "Bq": np.real(self.Bq).tolist(),
               "C_re": self.C.real.tolist(), "C_im": self.C.imag.tolist(),
               "v_re": self.v.real.tolist(), "v_im": self.v.imag.tolist(),
               "w_re": self.w.real.tolist(), "w_im": self.w.imag.tolist(),
               "r_re": self.r.real, "r_im": self.r.imag}
        if np.iscomplexobj(self.A) and np.any(self.A.imag):
            out["A_im"] = self.A.imag.tolist()
        if np.iscomplexobj(self.Bq) and np.any(self.Bq.imag):
            out["Bq_im"] = self.Bq.imag.tolist()
        if self.prefactor is not None:
            p = complex(self.prefactor)
            out["prefactor"] = [p.real, p.imag]
        return out

    @classmethod
    def from_json_dict(cls, d: dict) -> "GaussianKernel":
        try:
            A = np.array(d["A"], float)
            Bq = np.array(d["Bq"], float)
            if "A_im" in d:
                A = A + 1j * np.array(d["A_im"], float)
            if "Bq_im" in d:
                Bq = Bq + 1j * np.array(d["Bq_im"], float)
            C = np.array(d["C_re"], float) + 1j * np.array(d["C_im"], float)
            v = np.array(d["v_re"], float) + 1j * np.array(d["v_im"], float)
            w = np.array(d["w_re"], float) + 1j * np.array(d["w_im"], float)
            r = complex(d["r_re"], d["r_im"])
        except KeyError as exc:
            raise ValidationError(f"kernel JSON is missing field {exc.args[0]!r}") from None
        pref = complex(*d["prefactor"]) if "prefactor" in d else None
        K = cls(A=A, Bq=Bq, C=C, v=v, w=w, r=r, prefactor=pref)
        if K.n != d.get("n", K.n):
            raise ValidationError(f"kernel JSON declares n={d['n']} but matrices are {K.n}x{K.n}")
        return K

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def loads(cls, text: str) -> "GaussianKernel":
        return cls.from_json_dict(json.loads(text))


def sigma_kernel(g) -> GaussianKernel:
    """``S = 1/4 <(x-y), g (x-y)>``: the Abelian sub-semigroup element of metric ``g``."""
    g = np.asarray(g, float)
    return GaussianKernel(A=g, Bq=g, C=g, prefactor=sqrt_det(g / (4 * np.pi)))


def evaluate(K: GaussianKernel, x, y) -> complex:
    return K.norm_factor() * np.exp(-K.exponent(x, y))


def evaluate_many(K: GaussianKernel, X, Y) -> np.ndarray:
    """Vectorised evaluation at rows of ``X`` and ``Y`` (shape ``(m, n)`` each)."""
    X = np.atleast_2d(np.asarray(X, float))
    Y = np.atleast_2d(np.asarray(Y, float))
    S = (0.25 * np.einsum("pi,ij,pj->p", X, K.A, X) - 0.5 * np.einsum("pi,ij,pj->p", X, K.C, Y)
         + 0.25 * np.einsum("pi,ij,pj->p", Y, K.Bq, Y) - 0.5 * X @ K.v - 0.5 * Y @ K.w + K.r)
    return K.norm_factor() * np.exp(-S)


@dataclass(frozen=True)
class KernelValueGrid:
    points: list
    values: np.ndarray
    metadata: dict = field(default_factory=dict)


def evaluate_grid(K: GaussianKernel, points, workers: int = 1, metadata: dict | None = None) -> KernelValueGrid:
    """Evaluate at ``(x, y)`` pairs; output order matches input order for any ``workers``."""
    pts = [(np.asarray(x, float), np.asarray(y, float)) for x, y in points]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            vals = list(ex.map(lambda p: evaluate(K, *p), pts))
    else:
        vals = [evaluate(K, x, y) for x, y in pts]
    values = np.array(vals, complex)
    if not np.all(np.isfinite(values)):
        raise ValidationError("kernel values are not finite at some evaluation points")
    return KernelValueGrid(points=[(x.tolist(), y.tolist()) for x, y in pts], values=values,
                           metadata=dict(metadata or {}))


def convolve(K: GaussianKernel, Kp: GaussianKernel) -> GaussianKernel:
    """Closed-form ``(K o K')(x, z) = int dy K(x, y) K'(y, z)``."""
    if K.n != Kp.n:
        raise ValidationError(f"dimension mismatch {K.n} vs {Kp.n}")
    M = K.Bq + Kp.A
    ReM = 0.5 * (M + M.T).real
    if np.linalg.eigvalsh(ReM).min() <= 0:
        raise DivergenceError("B + A' has no positive definite real part; the y-integral diverges")
    Minv = np.linalg.inv(M)
    u = K.w + Kp.v
    pref = None
    if K.prefactor is not None or Kp.prefactor is not None:
        try:
            pref = K.norm_factor() * Kp.norm_factor() * (4 * np.pi) ** (K.n / 2) / sqrt_det(M)
        except ValidationError:
            pref = None
    return GaussianKernel(
        A=K.A - K.C @ Minv @ K.C.T,
        Bq=Kp.Bq - Kp.C.T @ Minv @ Kp.C,
        C=K.C @ Minv @ Kp.C,
        v=K.v + K.C @ Minv @ u,
        w=Kp.w + Kp.C.T @ Minv @ u,
        r=K.r + Kp.r - 0.25 * u @ Minv @ u,
        prefactor=pref,
    )


def _sym(M):
    return 0.5 * (M + M.T)


def heat_kernel(hd: HeatData) -> GaussianKernel:
    return GaussianKernel(A=hd.D, Bq=hd.D, C=hd.T, prefactor=(4 * np.pi) ** (-hd.n / 2) * hd.Omega)


def product_kernel(pd: ProductData) -> GaussianKernel:
    """Kernel of ``exp(t Delta_+) exp(s Delta_-)`` from the closed-form matrices."""
    return GaussianKernel(A=_sym(pd.Aplus), Bq=_sym(pd.Aminus), C=pd.Bmat,
                          prefactor=(4 * np.pi) ** (-pd.n / 2) * pd.Omega_ts)


def max_field_difference(K1: GaussianKernel, K2: GaussianKernel, relative: bool = True) -> float:
    """Largest entrywise difference over the six quadratic-form fields."""
    worst = 0.0
    for name, a in K1.fields().items():
        b = K2.fields()[name]
        diff = np.abs(np.asarray(a) - np.asarray(b)).max() if np.size(a) else 0.0
        if relative:
            diff /= max(1.0, np.abs(np.asarray(a)).max() if np.size(a) else 0.0)
        worst = max(worst, float(diff))
    return worst


@dataclass(frozen=True)
class TraceResult:
    """Diagonal integral of a product kernel.

    ``finite`` tells whether ``value`` is the trace; otherwise ``rank`` is the
    rank of the diagonal quadratic form and ``per_volume`` the diagonal value
    at the origin (the trace per unit volume along the flat directions).
    """
    finite: bool
    value: complex | None
    rank: int
    per_volume: complex
    M: np.ndarray


def trace_product(pd: ProductData, rel_tol: float = 1e-10) -> TraceResult:
    n = pd.n
    B = pd.Bmat
    M = _sym(pd.Aplus + pd.Aminus - B - B.T) / 4
    per_volume = complex((4 * np.pi) ** (-n / 2) * pd.Omega_ts)
    scale = max(np.abs(pd.Aplus).max(), np.abs(pd.Aminus).max(), np.abs(B).max(), 1e-300)
    ev = np.linalg.eigvalsh(M.real)
    rank = int(np.sum(np.abs(np.linalg.eigvals(M)) > rel_tol * scale))
    if ev.min() > rel_tol * scale:
        value = per_volume * np.pi ** (n / 2) / sqrt_det(M)
        return TraceResult(finite=True, value=complex(value), rank=rank, per_volume=per_volume, M=M)
    return TraceResult(finite=False, value=None, rank=rank, per_volume=per_volume, M=M)
