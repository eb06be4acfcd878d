"""Campbell-Hausdorff machinery on finite matrices.

Besides the general routines (``dexp_factor``, ``ch_product``, ``special_ch``)
this module builds an exact 2-step nilpotent matrix model of the algebra

    [D_A, D_B] = i F_AB,     i central.

The central ``i`` cannot be ``1j * identity`` in a finite nilpotent model, so
it is represented by a nilpotent matrix ``C`` with ``C @ anything == 0``.
Every identity checked here is polynomial in the generators, so the
substitution ``i -> C`` is harmless.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
import sympy as sp
from scipy.linalg import expm

from .errors import MethodFailure, ValidationError

SERIES_TOL = 1e-16
SPECIAL_CH_TOL = 1e-12


def _square(M, name: str) -> np.ndarray:
    M = np.array(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    return M


def _real_if_real(M: np.ndarray) -> np.ndarray:
    return M.real if np.all(M.imag == 0) else M


def comm(A, B) -> np.ndarray:
    return A @ B - B @ A


def dexp_factor(Q, V, direction: Literal["left", "right"] = "left",
                tol: float = SERIES_TOL, max_terms: int = 200) -> np.ndarray:
    """``sum_k (-+1)^k/(k+1)! ad_Q^k V``.

    ``left`` gives ``exp(-Q) d exp(Q)`` and ``right`` gives ``d exp(Q) exp(-Q)``
    along the direction ``V``.
    """
    Q, V = _square(Q, "Q"), _square(V, "V")
    if Q.shape != V.shape:
        raise ValidationError(f"Q and V shapes differ: {Q.shape} vs {V.shape}")
    if direction not in ("left", "right"):
        raise ValidationError(f"direction must be 'left' or 'right', got {direction!r}")
    sign = -1.0 if direction == "left" else 1.0
    term = V.copy()
    out = V.copy()
    scale = max(1.0, np.abs(V).max())
    for k in range(1, max_terms):
        term = sign * comm(Q, term) / (k + 1)
        out = out + term
        if np.abs(term).max() < tol * scale:
            break
    return _real_if_real(out)


def dexp_finite_difference(Q, V, direction: str = "left", h: float = 1e-5) -> np.ndarray:
    """Central-difference oracle for ``dexp_factor``."""
    Q, V = _square(Q, "Q"), _square(V, "V")
    d = (expm(Q + h * V) - expm(Q - h * V)) / (2 * h)
    E_inv = expm(-Q)
    out = E_inv @ d if direction == "left" else d @ E_inv
    return _real_if_real(out)


# -- psi(z) = z log z / (z - 1) ------------------------------------------------

def psi_closed(z):
    z = np.asarray(z, dtype=complex)
    near_one = np.abs(z - 1) < 1e-8
    safe = np.where(near_one, 2.0, z)
    w = 1 - z
    # second order Taylor at z=1: 1 - w/2 - w^2/6
    return np.where(near_one, 1 - w / 2 - w * w / 6, safe * np.log(safe) / (safe - 1))


def psi_series(z, tol: float = 1e-17, max_terms: int = 20000):
    """``1 - sum_{k>=1} (1-z)^k / (k(k+1))``, valid for ``|1 - z| < 1``."""
    z = np.asarray(z, dtype=complex)
    w = 1 - z
    if np.any(np.abs(w) >= 1):
        raise MethodFailure(f"psi series needs |1-z| < 1, got max {np.abs(w).max():.3g}")
    out = np.ones_like(z)
    p = np.ones_like(z)
    for k in range(1, max_terms):
        p = p * w
        term = p / (k * (k + 1))
        out = out - term
        if np.abs(term).max() < tol:
            return out
    raise MethodFailure(f"psi series did not converge in {max_terms} terms")


def _ad_group(G: np.ndarray) -> np.ndarray:
    """Matrix of ``Y -> G Y G^{-1}`` acting on row-major vec(Y)."""
    return np.kron(G, np.linalg.inv(G).T)


def _psi_apply(W: np.ndarray, x: np.ndarray, t: float, tol: float, max_terms: int) -> np.ndarray:
    # psi(1 - W) x.  Convergence is judged on the orbit of x only: W may have
    # large eigenvalues on directions that x never reaches (commuting case).
    out = x.copy()
    term = x.copy()
    scale = max(1.0, np.abs(x).max())
    for k in range(1, max_terms):
        term = W @ term
        inc = term / (k * (k + 1))
        out = out - inc
        size = np.abs(inc).max()
        if size < tol * scale:
            return out
        if size > 1e6 * scale or not np.isfinite(size):
            break
    raise MethodFailure(f"psi series diverges on the path at t={t:.6g}")


@dataclass(frozen=True)
class CHResult:
    V: np.ndarray
    residual: float        # ||exp P exp X - exp V||, max norm
    quad_error: float      # change in V when the quadrature points are doubled
    quad_points: int


def _ch_integral(P, X, npts: int, tol: float, max_terms: int) -> np.ndarray:
    d = P.shape[0]
    nodes, weights = np.polynomial.legendre.leggauss(npts)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    eP = expm(P)
    x = X.reshape(-1)
    acc = np.zeros(d * d, complex)
    I = np.eye(d * d)
    for tk, wk in zip(nodes, weights):
        W = I - _ad_group(eP @ expm(tk * X))
        acc = acc + wk * _psi_apply(W, x, tk, tol, max_terms)
    return P + acc.reshape(d, d)


def ch_product(P, X, quad_points: int = 32, tol: float = SERIES_TOL,
               max_terms: int = 5000) -> CHResult:
    """``V`` with ``exp P exp X = exp V`` via ``V = P + int_0^1 psi(e^{ad P} e^{t ad X}) X dt``."""
    P, X = _square(P, "P"), _square(X, "X")
    if P.shape != X.shape:
        raise ValidationError(f"P and X shapes differ: {P.shape} vs {X.shape}")
    if quad_points < 8:
        raise ValidationError(f"quad_points must be >= 8, got {quad_points}")
    V = _ch_integral(P, X, quad_points, tol, max_terms)
    V2 = _ch_integral(P, X, 2 * quad_points, tol, max_terms)
    residual = float(np.abs(expm(P) @ expm(X) - expm(V)).max())
    return CHResult(V=_real_if_real(V), residual=residual,
                    quad_error=float(np.abs(V2 - V).max()), quad_points=quad_points)


@dataclass(frozen=True)
class SpecialCH:
    value: np.ndarray      # exp(1/2 [A,B]) exp(A+B)
    residual: float        # against exp A exp B
    swap_residual: float   # exp A exp B vs exp[A,B] exp B exp A


def special_ch(A, B, tol: float = SPECIAL_CH_TOL) -> SpecialCH:
    """Closed-form product ``exp A exp B`` when ``[A,B]`` commutes with both."""
    A, B = _square(A, "A"), _square(B, "B")
    if A.shape != B.shape:
        raise ValidationError(f"A and B shapes differ: {A.shape} vs {B.shape}")
    C = comm(A, B)
    nA, nB = np.abs(comm(A, C)).max(), np.abs(comm(B, C)).max()
    if nA > tol or nB > tol:
        raise ValidationError(
            f"[A,B] is not central: |[A,[A,B]]| = {nA:.3e}, |[B,[A,B]]| = {nB:.3e} (tol {tol:.0e})")
    value = expm(0.5 * C) @ expm(A + B)
    lhs = expm(A) @ expm(B)
    swapped = expm(C) @ expm(B) @ expm(A)
    return SpecialCH(value=_real_if_real(value), residual=float(np.abs(lhs - value).max()),
                     swap_residual=float(np.abs(lhs - swapped).max()))


# -- 2-step nilpotent model ------------------------------------------------------

@dataclass(frozen=True)
class NilpotentRep:
    """Matrices ``M_A`` (A < 2n) of size 2n+2 with ``[M_A, M_B] = F_AB C``.

    Basis order is (top, e_1 .. e_2n, e_0) so every matrix is strictly upper
    triangular: ``M_A e_0 = e_A``, ``M_A e_B = F_AB/2 e_top``, ``C e_0 = e_top``.
    """
    n: int
    Ftilde: np.ndarray
    generators: tuple[np.ndarray, ...]
    central: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n + 2

    def element(self, xi, c: float = 0.0) -> np.ndarray:
        """``<xi, M> + c C``."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (2 * self.n,):
            raise ValidationError(f"coefficient vector must have length {2 * self.n}, got {xi.shape}")
        return np.tensordot(xi, np.array(self.generators), axes=1) + c * self.central

    def exp(self, X: np.ndarray) -> np.ndarray:
        """Terminating exponential ``I + X + X^2/2`` (valid because ``X^3 = 0``)."""
        X2 = X @ X
        if np.abs(X2 @ X).max() > 0:
            raise MethodFailure("element is not in the span of the generators; X^3 != 0")
        return np.eye(self.dim) + X + 0.5 * X2


def build_nilpotent_rep(Ftilde) -> NilpotentRep:
    F = np.array(Ftilde, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1] or F.shape[0] % 2:
        raise ValidationError(f"Ftilde must be 2n x 2n, got shape {F.shape}")
    if np.abs(F + F.T).max() > 1e-12:
        raise ValidationError("Ftilde is not antisymmetric")
    F = 0.5 * (F - F.T)
    m = F.shape[0]
    dim = m + 2
    top, zero = 0, m + 1
    gens = []
    for a in range(m):
        M = np.zeros((dim, dim))
        M[1 + a, zero] = 1.0
        M[top, 1:1 + m] = 0.5 * F[a]
        gens.append(M)
    C = np.zeros((dim, dim))
    C[top, zero] = 1.0
    return NilpotentRep(n=m // 2, Ftilde=F, generators=tuple(gens), central=C)


def rep_structure_residual(rep: NilpotentRep) -> float:
    """Largest deviation from the defining relations; exactly 0 for a valid rep."""
    G, C = rep.generators, rep.central
    worst = float(np.abs(C @ C).max())
    for a, Ma in enumerate(G):
        worst = max(worst, float(np.abs(comm(Ma, C)).max()))
        for b, Mb in enumerate(G):
            worst = max(worst, float(np.abs(comm(Ma, Mb) - rep.Ftilde[a, b] * C).max()))
            for Mc in G:
                worst = max(worst, float(np.abs(Ma @ Mb @ Mc).max()))
    return worst


def shift_identity_residual(rep: NilpotentRep, xi, eta) -> float:
    """``exp<xi+eta, M>`` against ``exp(<eta, M> - (eta.F.xi)/2 C) exp<xi, M>``."""
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    lhs = rep.exp(rep.element(xi + eta))
    corr = -0.5 * float(eta @ rep.Ftilde @ xi)
    rhs = rep.exp(rep.element(eta, corr)) @ rep.exp(rep.element(xi))
    return float(np.abs(lhs - rhs).max())


def _exact_matrix(M: np.ndarray) -> sp.Matrix:
    return sp.Matrix(M.shape[0], M.shape[1], [sp.Rational(float(v)) for v in M.reshape(-1)])


def derivative_identity_residual(rep: NilpotentRep, xi: Sequence[float]) -> float:
    """Exact check of ``d/dxi^i exp<xi, M> = (M_i - F_ij xi^j C / 2) exp<xi, M>``.

    The exponential is expanded as a polynomial in symbolic ``xi`` and
    differentiated with sympy; the result is evaluated at the rational value
    of ``xi``.  Returns 0.0 when the identity holds exactly.
    """
    m = 2 * rep.n
    xi_val = [sp.Rational(float(v)) for v in xi]
    if len(xi_val) != m:
        raise ValidationError(f"xi must have length {m}")
    syms = sp.symbols(f"x0:{m}")
    Ms = [_exact_matrix(M) for M in rep.generators]
    C = _exact_matrix(rep.central)
    F = _exact_matrix(rep.Ftilde)
    X = sp.zeros(rep.dim, rep.dim)
    for s, M in zip(syms, Ms):
        X = X + s * M
    E = sp.eye(rep.dim) + X + X * X / 2
    subs = dict(zip(syms, xi_val))
    E_val = E.subs(subs)
    worst = sp.Integer(0)
    for i in range(m):
        lhs = E.diff(syms[i]).subs(subs)
        shift = sum((F[i, j] * xi_val[j] for j in range(m)), sp.Integer(0))
        rhs = (Ms[i] - shift / 2 * C) * E_val
        diff = (lhs - rhs).applyfunc(sp.Abs)
        worst = max(worst, max(diff))
    return float(worst)


def nilpotent_dexp_residual(rep: NilpotentRep, xi, eta) -> float:
    """``dexp_factor`` on the rep against the exact derivative of the terminating exponential."""
    Q, V = rep.element(xi), rep.element(eta)
    # exp(-Q) (V + (QV + VQ)/2) collapses to V - [Q, V]/2 once triple products vanish
    exact = V - 0.5 * (Q @ V - V @ Q)
    return float(np.abs(dexp_factor(Q, V, "left") - exact).max())
