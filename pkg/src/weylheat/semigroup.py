"""Matrix data of single heat semigroups and of products of two semigroups.

For one Laplacian ``Delta_g = g^{ij} nabla_i nabla_j`` with
``[nabla_j, nabla_k] = i R_jk``:

    D(t) = (1/t) g Psi(t g^{-1} iR),   T(t) = D(t) + iR,   det T(t) = Omega(t)^2.

For two of them, ``exp(t Delta_+) exp(s Delta_-)`` is described by the
2n x 2n metric ``Phi(Q~^{-1} iF~) Q~^{-1}`` and by the n x n matrices
``D(t,s), Z, H, A_+, A_-, B`` of the product kernel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import (EVEN_FUNCTIONS, EVEN_TAYLOR, CanonicalForm, apply_even_function,
                        as_curvature, as_metric, canonical_decompose)
from .errors import MethodFailure, ValidationError

COND_LIMIT = 1e8
SERIES_TOL = 1e-15


@dataclass(frozen=True)
class HeatData:
    t: float
    g: np.ndarray
    R: np.ndarray
    D: np.ndarray
    T: np.ndarray
    Omega: float
    canon: CanonicalForm

    @property
    def n(self) -> int:
        return self.g.shape[0]


def heat_matrices(t: float, g, R) -> HeatData:
    if not t > 0:
        raise ValidationError(f"diffusion time must be positive, got t={t!r}")
    g = as_metric(g)
    R = as_curvature(R)
    canon = canonical_decompose(g, R)
    n = g.shape[0]
    D = g @ apply_even_function("psi", t, g, R, canon=canon) / t
    T = D + 1j * R
    # Omega as a product of positive block factors keeps the branch fixed
    log_omega = 0.5 * np.linalg.slogdet(g)[1] - 0.5 * (n - 2 * canon.rank) * np.log(t)
    for b in canon.blocks:
        x = t * b.B
        # log(B / sinh(tB)) without overflow for large tB
        log_omega += b.mult * (np.log(b.B) - (x + np.log1p(-np.exp(-2 * x)) - np.log(2.0)))
    return HeatData(t=float(t), g=g, R=R, D=D, T=T, Omega=float(np.exp(log_omega)), canon=canon)


def det_identity_residual(hd: HeatData) -> float:
    """Relative error of ``det(D + iR) = Omega^2``."""
    lhs = np.linalg.det(hd.T)
    return abs(lhs - hd.Omega ** 2) / hd.Omega ** 2


# -- matrix functions of non-normal matrices ---------------------------------

def matrix_function(fn_id: str, M: np.ndarray, cond_limit: float = COND_LIMIT,
                    series_tol: float = SERIES_TOL, max_terms: int = 2000) -> tuple[np.ndarray, str]:
    """``f(M)`` for a general complex square matrix; returns ``(value, method)``.

    Eigendecomposition when the eigenvector matrix has condition number at most
    ``cond_limit``; otherwise the even Taylor series, valid for spectral radius < 1.
    """
    f = EVEN_FUNCTIONS[fn_id]
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if not np.any(M):
        return complex(f(np.asarray(0.0))) * np.eye(n, dtype=complex), "zero"
    w, V = np.linalg.eig(M)
    if np.linalg.cond(V) <= cond_limit:
        fw = f(w.astype(complex))
        return V @ np.diag(fw) @ np.linalg.inv(V), "eig"
    rho = np.abs(w).max()
    if rho >= 1.0:
        raise MethodFailure(
            f"{fn_id}: matrix is ill-conditioned for diagonalisation (cond > {cond_limit:g}) "
            f"and its spectral radius {rho:.3g} >= 1 rules out the series")
    coeff = EVEN_TAYLOR[fn_id]
    M2 = M @ M
    power = np.eye(n, dtype=complex)
    out = coeff(0) * power
    for k in range(1, max_terms):
        power = power @ M2
        term = coeff(k) * power
        out = out + term
        if np.abs(term).max() < series_tol * max(1.0, np.abs(out).max()):
            return out, "series"
    raise MethodFailure(f"{fn_id}: power series did not converge in {max_terms} terms")


# -- two semigroups ----------------------------------------------------------

LAMBDA_HALF = 0.5


def lambda_matrix(n: int) -> np.ndarray:
    """Change of basis ``(nabla+, nabla-) = Lambda (nabla, X)``."""
    I = np.eye(n)
    return np.block([[I, LAMBDA_HALF * I], [I, -LAMBDA_HALF * I]])


def tilde_F(R_plus, R_minus) -> np.ndarray:
    Rbar = 0.5 * (R_plus + R_minus)
    return np.block([[R_plus, Rbar], [Rbar, R_minus]])


def basis_F(R_plus, R_minus) -> np.ndarray:
    """Structure matrix ``[[Rbar, F], [F, 0]]`` of the ``(nabla, X)`` basis."""
    Rbar = 0.5 * (R_plus + R_minus)
    F = 0.5 * (R_plus - R_minus)
    return np.block([[Rbar, F], [F, np.zeros_like(F)]])


def tilde_Q(plus: HeatData, minus: HeatData) -> np.ndarray:
    iRbar = 0.5j * (plus.R + minus.R)
    return np.block([[plus.D, -iRbar], [iRbar, minus.D]])


def product_metric(plus: HeatData, minus: HeatData, cond_limit: float = COND_LIMIT) -> np.ndarray:
    """``Phi(Q~^{-1} iF~) Q~^{-1}``, the metric of ``exp(t Delta_+) exp(s Delta_-) = exp H``."""
    _check_pair(plus, minus)
    Q = tilde_Q(plus, minus)
    Qinv = np.linalg.inv(Q)
    X = Qinv @ (1j * tilde_F(plus.R, minus.R))
    Phi_X, _ = matrix_function("phi", X, cond_limit=cond_limit)
    return Phi_X @ Qinv


def _check_pair(plus: HeatData, minus: HeatData) -> None:
    if plus.n != minus.n:
        raise ValidationError(f"dimension mismatch: {plus.n} vs {minus.n}")


@dataclass(frozen=True)
class ProductData:
    t: float
    s: float
    plus_data: HeatData
    minus_data: HeatData
    Rbar: np.ndarray
    F: np.ndarray
    Qtilde: np.ndarray
    Ftilde: np.ndarray
    Gtilde_inv: np.ndarray
    Dts: np.ndarray
    Z: np.ndarray
    H: np.ndarray
    Aplus: np.ndarray
    Aminus: np.ndarray
    Bmat: np.ndarray
    Omega_ts: float
    residuals: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.Dts.shape[0]


IDENTITY_TOL = 1e-10
H_EXPANSION_TOL = 1e-9


def product_matrices(plus: HeatData, minus: HeatData, with_metric: bool = True) -> ProductData:
    """All matrices of the product ``exp(t Delta_+) exp(s Delta_-)`` and its kernel.

    ``with_metric=False`` skips the 2n x 2n matrix function (``Gtilde_inv`` is then NaN).
    """
    _check_pair(plus, minus)
    n = plus.n
    Rp, Rm = plus.R, minus.R
    Rbar = 0.5 * (Rp + Rm)
    F = 0.5 * (Rp - Rm)
    iF = 1j * F
    Dp, Dm = plus.D, minus.D
    Tp, Tm = plus.T, minus.T
    D = Dp + Dm
    Dinv = np.linalg.inv(D)
    Z = Dp - Dm - 2j * Rm
    H = 0.25 * (D - Z.T @ Dinv @ Z)
    H_minus_form = Dm - Tm.T @ Dinv @ Tm
    H_plus_form = (Dp - Tp @ Dinv @ Tp.T - 2 * Tp @ Dinv @ iF
                   + 2 * iF @ Dinv @ Tp.T + 4 * iF @ Dinv @ iF)
    Aplus = Dp - Tp @ Dinv @ Tp.T
    Aminus = H_minus_form
    Bmat = Tp @ Dinv @ Tm
    w = np.linalg.eigvalsh(D)
    if w.min() <= 0:
        raise MethodFailure("D(t,s) is not positive definite")
    Omega_ts = plus.Omega * minus.Omega * float(np.prod(w ** -0.5))

    scale = max(1.0, np.abs(H).max())
    residuals = {
        "A_minus_equals_H": float(np.abs(Aminus - H).max() / scale),
        "H_minus_expansion": float(np.abs(H_minus_form - H).max() / scale),
        "H_plus_expansion": float(np.abs(H_plus_form - H).max() / scale),
    }
    if residuals["A_minus_equals_H"] > IDENTITY_TOL:
        raise MethodFailure(f"A_- = H identity violated: {residuals['A_minus_equals_H']:.3e}")
    for key in ("H_minus_expansion", "H_plus_expansion"):
        if residuals[key] > H_EXPANSION_TOL:
            raise MethodFailure(f"{key} disagrees with H: {residuals[key]:.3e}")

    Q = tilde_Q(plus, minus)
    Ft = tilde_F(Rp, Rm)
    G = product_metric(plus, minus) if with_metric else np.full((2 * n, 2 * n), np.nan, complex)
    return ProductData(t=plus.t, s=minus.t, plus_data=plus, minus_data=minus, Rbar=Rbar, F=F,
                       Qtilde=Q, Ftilde=Ft, Gtilde_inv=G, Dts=D, Z=Z, H=H, Aplus=Aplus,
                       Aminus=Aminus, Bmat=Bmat, Omega_ts=Omega_ts, residuals=residuals)


def product_from_config(t, s, g_plus, R_plus, g_minus, R_minus, with_metric: bool = True) -> ProductData:
    return product_matrices(heat_matrices(t, g_plus, R_plus), heat_matrices(s, g_minus, R_minus),
                            with_metric=with_metric)


def omega_tilde_residual(pd: ProductData) -> float:
    """Relative error of ``det(Q~ + iF~) = Omega_+^2 Omega_-^2``."""
    lhs = np.linalg.det(pd.Qtilde + 1j * pd.Ftilde)
    rhs = (pd.plus_data.Omega * pd.minus_data.Omega) ** 2
    return abs(lhs - rhs) / rhs


# -- block form of the product metric -----------------------------------------

@dataclass(frozen=True)
class HamiltonianBlocks:
    """``H = <nabla^, G^{-1} nabla^> + <X, V X>`` with ``nabla^ = nabla + G Y X``."""
    Ginv: np.ndarray
    Y: np.ndarray
    M: np.ndarray
    V: np.ndarray | None
    shift_plus: np.ndarray | None
    shift_minus: np.ndarray | None

    def assemble(self) -> np.ndarray:
        return np.block([[self.Ginv, self.Y], [self.Y.T, self.M]])


def hamiltonian_blocks(Gtilde_inv, cond_limit: float = 1e12) -> HamiltonianBlocks:
    G2 = np.asarray(Gtilde_inv)
    n2 = G2.shape[0]
    if G2.shape != (n2, n2) or n2 % 2:
        raise ValidationError(f"expected a 2n x 2n matrix, got {G2.shape}")
    n = n2 // 2
    L = lambda_matrix(n)
    Gfull = L.T @ G2 @ L
    Ginv, Y, M = Gfull[:n, :n], Gfull[:n, n:], Gfull[n:, n:]
    if np.linalg.cond(Ginv) > cond_limit:
        return HamiltonianBlocks(Ginv=Ginv, Y=Y, M=M, V=None, shift_plus=None, shift_minus=None)
    G = np.linalg.inv(Ginv)
    I = np.eye(n)
    return HamiltonianBlocks(Ginv=Ginv, Y=Y, M=M, V=M - Y.T @ G @ Y,
                             shift_plus=0.5 * (I + 2 * G @ Y), shift_minus=0.5 * (I - 2 * G @ Y))


def disassemble(blocks: HamiltonianBlocks) -> np.ndarray:
    """Inverse of :func:`hamiltonian_blocks`: back to the ``(nabla+, nabla-)`` basis."""
    Linv = np.linalg.inv(lambda_matrix(blocks.Ginv.shape[0]))
    return Linv.T @ blocks.assemble() @ Linv


def equal_operator_projector(t: float, s: float, B: float) -> tuple[np.ndarray, float]:
    """Scalar 2x2 reduction of ``Q~^{-1} iF~ = c Pi`` when both operators coincide.

    With ``a = coth(tB)``, ``b = coth(sB)`` returns ``(Pi, c)`` where
    ``c = (a + b)/(ab + 1) = tanh((t+s)B)``.
    """
    a = 1.0 / np.tanh(t * B)
    b = 1.0 / np.tanh(s * B)
    Pi = np.array([[b + 1, b + 1], [a - 1, a - 1]]) / (a + b)
    return Pi, (a + b) / (a * b + 1)
