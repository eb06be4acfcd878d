"""Polynomial representation of the Weyl algebra.

Operators ``nabla_k = d_k - 1/2 i R_kj x^j``, multiplication by linear forms,
and Laplacians ``g^{ij} nabla_i nabla_j`` act on polynomials with complex
coefficients.  Every commutation relation between these operators is an
identity between polynomial-coefficient differential operators, so checking
it on all monomials up to a modest degree is an exact proof for that degree.

Two coefficient fields are supported: exact Gaussian rationals (the default;
floats are converted with ``Fraction`` without rounding) and Python complex
doubles.  ``WEYLHEAT_PRECISION`` selects the default.
"""
from __future__ import annotations

import functools
import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import sympy

from .errors import ValidationError


@dataclass(frozen=True)
class QQi:
    """Exact complex rational ``re + i im``."""
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __add__(self, o):
        o = to_qqi(o)
        if not o.im and not self.im:
            return QQi(self.re + o.re, self.im)
        if not o.re and not self.re:
            return QQi(self.re, self.im + o.im)
        return QQi(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return QQi(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-to_qqi(o))

    def __rsub__(self, o):
        return to_qqi(o) - self

    def __mul__(self, o):
        if isinstance(o, (int, Fraction)):
            return QQi(self.re * o, self.im * o)
        o = to_qqi(o)
        # purely real or purely imaginary factors are the common case
        if not o.im:
            return QQi(self.re * o.re, self.im * o.re)
        if not o.re:
            return QQi(-self.im * o.im, self.re * o.im)
        if not self.im:
            return QQi(self.re * o.re, self.re * o.im)
        if not self.re:
            return QQi(-self.im * o.im, self.im * o.re)
        return QQi(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))


def to_qqi(x) -> QQi:
    if isinstance(x, QQi):
        return x
    if isinstance(x, complex):
        return QQi(Fraction(x.real), Fraction(x.imag))
    if isinstance(x, (np.complexfloating,)):
        return QQi(Fraction(float(x.real)), Fraction(float(x.imag)))
    return QQi(Fraction(x))


I_UNIT = QQi(Fraction(0), Fraction(1))


def default_precision() -> str:
    mode = os.environ.get("WEYLHEAT_PRECISION", "exact").lower()
    if mode not in ("exact", "double"):
        raise ValidationError(f"WEYLHEAT_PRECISION must be 'exact' or 'double', got {mode!r}")
    return mode


class Field:
    """Coefficient arithmetic for one precision mode."""

    def __init__(self, mode: str | None = None):
        self.mode = mode or default_precision()
        if self.mode not in ("exact", "double"):
            raise ValidationError(f"unknown precision mode {self.mode!r}")
        self.exact = self.mode == "exact"
        self.zero = QQi() if self.exact else 0j
        self.one = QQi(Fraction(1)) if self.exact else 1 + 0j
        self.i = I_UNIT if self.exact else 1j
        self.half = QQi(Fraction(1, 2)) if self.exact else 0.5 + 0j

    def coerce(self, x):
        if self.exact:
            if isinstance(x, (np.floating, np.integer)):
                x = x.item()
            return to_qqi(x)
        return complex(x)

    def matrix(self, M) -> list[list]:
        M = np.asarray(M)
        return [[self.coerce(v) for v in row] for row in M.tolist()]

    def inverse(self, M) -> list[list]:
        """Matrix inverse, exact via sympy rationals in exact mode."""
        if self.exact:
            rows = [[sympy.Rational(Fraction(float(v)).numerator, Fraction(float(v)).denominator)
                     for v in row] for row in np.asarray(M, float).tolist()]
            inv = sympy.Matrix(rows).inv()
            return [[QQi(Fraction(int(sympy.fraction(v)[0]), int(sympy.fraction(v)[1])))
                     for v in inv.row(i)] for i in range(inv.rows)]
        return self.matrix(np.linalg.inv(np.asarray(M, float)))


Monomial = tuple


@dataclass(frozen=True)
class PolyFunction:
    """Sparse polynomial ``sum_alpha c_alpha x^alpha`` with zero terms removed."""
    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {tuple(int(a) for a in k): c for k, c in self.terms.items() if c}
        for k in clean:
            if len(k) != self.n:
                raise ValidationError(f"monomial {k} has wrong length for n={self.n}")
        object.__setattr__(self, "terms", clean)

    @classmethod
    def monomial(cls, alpha: Sequence[int], coeff=1, fld: Field | None = None) -> "PolyFunction":
        fld = fld or Field()
        return cls(len(alpha), {tuple(alpha): fld.coerce(coeff)})

    def __add__(self, o: "PolyFunction") -> "PolyFunction":
        out = dict(self.terms)
        for k, c in o.terms.items():
            out[k] = out[k] + c if k in out else c
        return PolyFunction(self.n, out)

    def __sub__(self, o: "PolyFunction") -> "PolyFunction":
        return self + o.scale(-1)

    def scale(self, c) -> "PolyFunction":
        return PolyFunction(self.n, {k: v * c for k, v in self.terms.items()})

    @property
    def degree(self) -> int:
        return max((sum(k) for k in self.terms), default=-1)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self) -> list:
        """Graded lexicographic order: total degree, then exponents descending."""
        return sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), tuple(-a for a in kv[0])))

    def __call__(self, x) -> complex:
        return sum(complex(c) * np.prod([xi ** a for xi, a in zip(x, k)]) for k, c in self.terms.items())


def partial(p: PolyFunction, k: int) -> PolyFunction:
    out = {}
    for alpha, c in p.terms.items():
        if alpha[k]:
            beta = list(alpha)
            beta[k] -= 1
            out[tuple(beta)] = c * alpha[k]
    return PolyFunction(p.n, out)


def mul_linear(p: PolyFunction, coeffs: Sequence) -> PolyFunction:
    """Multiply by ``sum_j coeffs[j] x^j``."""
    out: dict = {}
    for j, cj in enumerate(coeffs):
        if not cj:
            continue
        for alpha, c in p.terms.items():
            beta = list(alpha)
            beta[j] += 1
            beta = tuple(beta)
            val = c * cj
            out[beta] = out[beta] + val if beta in out else val
    return PolyFunction(p.n, out)


@dataclass(frozen=True)
class WeylOperator:
    """An element of the Weyl algebra realised on polynomials.

    ``kind`` is one of ``nabla`` (needs ``R`` and ``index``), ``multiplication``
    (by the linear form ``coeffs``), ``scalar``, ``laplacian`` (needs ``g`` and
    ``R``), ``composition`` (``parts`` applied right to left) or ``sum``.
    """
    kind: str
    R: np.ndarray | None = None
    g: np.ndarray | None = None
    index: int | None = None
    coeffs: tuple | None = None
    value: complex | None = None
    parts: tuple = ()
    mode: str | None = None

    @property
    def field(self) -> Field:
        return Field(self.mode)


def nabla(R, k: int, mode: str | None = None) -> WeylOperator:
    return WeylOperator("nabla", R=np.asarray(R, float), index=k, mode=mode)


def multiplication(coeffs, mode: str | None = None) -> WeylOperator:
    return WeylOperator("multiplication", coeffs=tuple(coeffs), mode=mode)


def scalar(value, mode: str | None = None) -> WeylOperator:
    return WeylOperator("scalar", value=value, mode=mode)


def laplacian(g, R, mode: str | None = None) -> WeylOperator:
    return WeylOperator("laplacian", g=np.asarray(g, float), R=np.asarray(R, float), mode=mode)


def compose(*ops: WeylOperator) -> WeylOperator:
    return WeylOperator("composition", parts=tuple(ops))


def op_sum(*ops: WeylOperator) -> WeylOperator:
    return WeylOperator("sum", parts=tuple(ops))


def x_operator(F, i: int, mode: str | None = None) -> WeylOperator:
    """``X_i = -i F_ij x^j``."""
    fld = Field(mode)
    return multiplication([-fld.i * fld.coerce(v) for v in np.asarray(F, float)[i]], mode=mode)


def _apply_nabla(Rrow: list, k: int, p: PolyFunction, fld: Field) -> PolyFunction:
    # d_k p - 1/2 i R_kj x^j p
    lin = [-fld.half * fld.i * r for r in Rrow]
    return partial(p, k) + mul_linear(p, lin)


@functools.lru_cache(maxsize=256)
def _nabla_linear(raw: bytes, n: int, k: int, mode: str) -> tuple:
    """Coefficients of ``-1/2 i R_kj x^j``, cached per curvature row and precision."""
    fld = Field(mode)
    row = np.frombuffer(raw, dtype=float).reshape(n, n)[k]
    return tuple(-fld.half * fld.i * fld.coerce(r) for r in row)


def apply(op: WeylOperator, p: PolyFunction) -> PolyFunction:
    fld = op.field
    kind = op.kind
    if kind == "nabla":
        R = op.R
        if R.shape != (p.n, p.n):
            raise ValidationError(f"nabla curvature is {R.shape}, polynomial has n={p.n}")
        lin = _nabla_linear(np.ascontiguousarray(R, float).tobytes(), p.n, op.index, fld.mode)
        return partial(p, op.index) + mul_linear(p, lin)
    if kind == "multiplication":
        if len(op.coeffs) != p.n:
            raise ValidationError(f"linear form has {len(op.coeffs)} coefficients, polynomial has n={p.n}")
        return mul_linear(p, [fld.coerce(c) for c in op.coeffs])
    if kind == "scalar":
        return p.scale(fld.coerce(op.value))
    if kind == "laplacian":
        if op.g.shape != (p.n, p.n) or op.R.shape != (p.n, p.n):
            raise ValidationError("laplacian matrices do not match the polynomial dimension")
        return _laplacian_from_inverse(fld.inverse(op.g), op.R, fld)(p)
    if kind == "composition":
        for part in reversed(op.parts):
            p = apply(part, p)
        return p
    if kind == "sum":
        out = PolyFunction(p.n)
        for part in op.parts:
            out = out + apply(part, p)
        return out
    raise ValidationError(f"unknown operator kind {kind!r}")


def commutator(a: WeylOperator, b: WeylOperator, p: PolyFunction) -> PolyFunction:
    return apply(a, apply(b, p)) - apply(b, apply(a, p))


def monomial_basis(n: int, degree: int, fld: Field | None = None) -> list[PolyFunction]:
    fld = fld or Field()
    return [PolyFunction.monomial(a, 1, fld) for a in itertools.product(range(degree + 1), repeat=n)
            if sum(a) <= degree]


def max_residual(residual: Callable[[PolyFunction], PolyFunction], n: int, degree: int,
                 fld: Field) -> float:
    return max((residual(m).max_abs() for m in monomial_basis(n, degree, fld)), default=0.0)


def _curvature_for(signs: str, R_plus, R_minus):
    Rbar = 0.5 * (np.asarray(R_plus, float) + np.asarray(R_minus, float))
    table = {"++": (R_plus, R_plus, R_plus), "--": (R_minus, R_minus, R_minus),
             "+-": (R_plus, R_minus, Rbar), "-+": (R_minus, R_plus, Rbar)}
    if signs not in table:
        raise ValidationError(f"signs must be one of {sorted(table)}, got {signs!r}")
    return table[signs]


def commutator_residual(i: int, j: int, signs: str, R_plus, R_minus, basis_degree: int,
                        mode: str | None = None) -> float:
    """Max coefficient of ``([nabla^a_i, nabla^b_j] - i Rab_ij) m`` over monomials ``m``.

    ``Rab`` is ``R+``, ``R-`` or ``(R+ + R-)/2`` for equal or mixed signs.
    """
    fld = Field(mode)
    Ra, Rb, Rab = _curvature_for(signs, np.asarray(R_plus, float), np.asarray(R_minus, float))
    n = Ra.shape[0]
    a, b = nabla(Ra, i, fld.mode), nabla(Rb, j, fld.mode)
    c = fld.i * fld.coerce(float(np.asarray(Rab)[i, j]))
    return max_residual(lambda m: commutator(a, b, m) - m.scale(c), n, basis_degree, fld)


def bracket_inverse_metric(g_plus, g_minus, R, fld: Field) -> list[list]:
    """``{g+^{-1}, g-^{-1}} = g+^{-1} R g-^{-1} - g-^{-1} R g+^{-1}`` in the field's arithmetic."""
    gp, gm, Rm = fld.inverse(g_plus), fld.inverse(g_minus), fld.matrix(R)
    n = len(Rm)

    def mm(A, B):
        return [[sum((A[i][k] * B[k][j] for k in range(n)), fld.zero) for j in range(n)] for i in range(n)]

    X, Y = mm(mm(gp, Rm), gm), mm(mm(gm, Rm), gp)
    return [[X[i][j] - Y[i][j] for j in range(n)] for i in range(n)]


def _laplacian_from_inverse(ginv: list[list], R, fld: Field) -> Callable[[PolyFunction], PolyFunction]:
    Rm = fld.matrix(R)
    n = len(Rm)

    def op(p):
        out = PolyFunction(p.n)
        first = [_apply_nabla(Rm[j], j, p, fld) for j in range(n)]
        for i in range(n):
            acc = PolyFunction(p.n)
            for j in range(n):
                if ginv[i][j]:
                    acc = acc + first[j].scale(ginv[i][j])
            out = out + _apply_nabla(Rm[i], i, acc, fld)
        return out
    return op


def laplacian_commutator_residual(g_plus, g_minus, R, basis_degree: int, mode: str | None = None) -> dict:
    """Residual of ``[Delta_{g+}, Delta_{g-}] - 2i Delta_G`` with ``G^{-1} = {g+^{-1}, g-^{-1}}``.

    Returns ``{"residual": ..., "commuting": bool, "raw_commutator": ...}``;
    ``raw_commutator`` is the largest coefficient of ``[Delta+, Delta-] m`` and
    vanishes whenever the bracket does.
    """
    fld = Field(mode)
    R = np.asarray(R, float)
    n = R.shape[0]
    Lp = _laplacian_from_inverse(fld.inverse(g_plus), R, fld)
    Lm = _laplacian_from_inverse(fld.inverse(g_minus), R, fld)
    Ginv = bracket_inverse_metric(g_plus, g_minus, R, fld)
    LG = _laplacian_from_inverse(Ginv, R, fld)
    two_i = fld.i * fld.coerce(2)
    residual = raw = 0.0
    for m in monomial_basis(n, basis_degree, fld):
        comm = Lp(Lm(m)) - Lm(Lp(m))
        raw = max(raw, comm.max_abs())
        residual = max(residual, (comm - LG(m).scale(two_i)).max_abs())
    commuting = all(not v for row in Ginv for v in row) if fld.exact else \
        max(abs(v) for row in Ginv for v in row) < 1e-14
    return {"residual": residual, "commuting": commuting, "raw_commutator": raw, "mode": fld.mode}


def x_operator_check(R_plus, R_minus, basis_degree: int, mode: str | None = None) -> dict:
    """Residuals of the ``(nabla, X)`` basis relations with ``F = (R+ - R-)/2``.

    Checks ``[nabla_i, nabla_j] = i Rbar_ij``, ``[nabla_i, X_j] = i F_ij``,
    ``[X_i, X_j] = 0`` and the combined form ``[D_A, D_B] = i calF_AB``.
    """
    fld = Field(mode)
    Rp, Rm = np.asarray(R_plus, float), np.asarray(R_minus, float)
    n = Rp.shape[0]
    Rbar = 0.5 * (Rp + Rm)
    F = 0.5 * (Rp - Rm)
    calF = np.block([[Rbar, F], [F, np.zeros_like(F)]])
    ops = [nabla(Rbar, k, fld.mode) for k in range(n)] + [x_operator(F, k, fld.mode) for k in range(n)]
    worst = {"nabla_nabla": 0.0, "nabla_X": 0.0, "X_X": 0.0}
    for A, B in itertools.product(range(2 * n), repeat=2):
        c = fld.i * fld.coerce(float(calF[A, B]))
        res = max_residual(lambda m: commutator(ops[A], ops[B], m) - m.scale(c), n, basis_degree, fld)
        key = "nabla_nabla" if A < n and B < n else ("X_X" if A >= n and B >= n else "nabla_X")
        worst[key] = max(worst[key], res)
    worst["all"] = max(worst.values())
    worst["mode"] = fld.mode
    return worst


def tilde_basis_residual(R_plus, R_minus, basis_degree: int, mode: str | None = None) -> float:
    """All ``[nabla^a_i, nabla^b_j] = i F~_AB`` relations of the ``(nabla+, nabla-)`` basis at once."""
    Rp = np.asarray(R_plus, float)
    n = Rp.shape[0]
    worst = 0.0
    for signs in ("++", "--", "+-", "-+"):
        for i, j in itertools.product(range(n), repeat=2):
            worst = max(worst, commutator_residual(i, j, signs, R_plus, R_minus, basis_degree, mode))
    return worst
