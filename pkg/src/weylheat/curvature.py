"""Antisymmetric curvature matrices and even functions of ``g^{-1} iR``.

The central object is the canonical form

    g^{-1} iR = omega (sum_a B_a E_a) omega^{-1},    omega omega^T = g^{-1},

with real invariants ``B_a > 0``, real symmetric projectors ``P_a`` and
generators ``E_a = i J_a`` (``J_a`` real antisymmetric) obeying
``E_a^2 = P_a``.  Every even analytic ``f`` then reduces to scalars:

    f(t g^{-1} iR) = omega {f(0) I + sum_a [f(t B_a) - f(0)] P_a} omega^{-1}.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.special import bernoulli, factorial

from .errors import DomainError, MethodFailure, ValidationError

TOL_SYM = 1e-12
PAIRING_TOL = 1e-9
ZERO_MODE_TOL = 1e-12
SERIES_RADIUS = 1e-4
SERIES_TERMS = 8


def as_metric(g, tol: float = TOL_SYM, name: str = "g") -> np.ndarray:
    """Validate a positive definite symmetric metric and return it as a float array."""
    g = np.array(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise ValidationError(f"{name} has non-finite entries")
    asym = np.abs(g - g.T)
    if asym.max() > tol * max(1.0, np.abs(g).max()):
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise ValidationError(
            f"{name} is not symmetric: entry ({i},{j})={float(g[i, j])!r} vs ({j},{i})={float(g[j, i])!r}")
    g = 0.5 * (g + g.T)
    w = np.linalg.eigvalsh(g)
    if w.min() <= 0:
        raise ValidationError(f"{name} is not positive definite (smallest eigenvalue {w.min():.3e})")
    return g


def as_curvature(R, tol: float = TOL_SYM, name: str = "R") -> np.ndarray:
    """Validate a real antisymmetric matrix; the result is exactly antisymmetric."""
    R = np.array(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {R.shape}")
    if not np.all(np.isfinite(R)):
        raise ValidationError(f"{name} has non-finite entries")
    sym = np.abs(R + R.T)
    if sym.max() > tol:
        i, j = np.unravel_index(np.argmax(sym), sym.shape)
        raise ValidationError(
            f"{name} is not antisymmetric: entry ({i},{j})={float(R[i, j])!r} vs ({j},{i})={float(R[j, i])!r}")
    return 0.5 * (R - R.T)


def _check_pair(g: np.ndarray, R: np.ndarray) -> None:
    if g.shape != R.shape:
        raise ValidationError(f"metric shape {g.shape} does not match curvature shape {R.shape}")


def r_bracket(A, B, R) -> np.ndarray:
    """The curvature bracket ``{A, B} = A R B - B R A``."""
    A, B, R = (np.asarray(M) for M in (A, B, R))
    if not (A.shape == B.shape == R.shape) or A.ndim != 2:
        raise ValidationError(f"r_bracket: shapes {A.shape}, {B.shape}, {R.shape} are not conformable")
    return A @ R @ B - B @ R @ A


@dataclass(frozen=True)
class Block:
    """One invariant ``B`` with its projector and generator.

    ``mult`` counts merged degenerate 2-planes, so ``tr P == 2 * mult``.
    """
    B: float
    P: np.ndarray
    E: np.ndarray
    mult: int = 1


@dataclass(frozen=True)
class CanonicalForm:
    omega: np.ndarray
    blocks: list[Block] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def rank(self) -> int:
        """Number of 2-planes carrying non-zero curvature."""
        return sum(b.mult for b in self.blocks)

    def reconstruct(self) -> np.ndarray:
        """``omega (sum B_a E_a) omega^{-1}``, which equals ``g^{-1} iR``."""
        core = sum((b.B * b.E for b in self.blocks), np.zeros((self.n, self.n), complex))
        return self.omega @ core @ np.linalg.inv(self.omega)

    def spectral(self, f0: complex, fvals: Sequence[complex]) -> np.ndarray:
        """``omega {f0 I + sum (f_a - f0) P_a} omega^{-1}`` for given block values."""
        core = f0 * np.eye(self.n, dtype=complex)
        for b, fa in zip(self.blocks, fvals):
            core = core + (fa - f0) * b.P
        return self.omega @ core @ np.linalg.inv(self.omega)


def canonical_decompose(g, R, pairing_tol: float = PAIRING_TOL,
                        zero_tol: float = ZERO_MODE_TOL) -> CanonicalForm:
    g = as_metric(g)
    R = as_curvature(R)
    _check_pair(g, R)
    n = g.shape[0]
    w, V = np.linalg.eigh(g)
    omega = (V * w ** -0.5) @ V.T
    K = omega.T @ R @ omega
    scale = np.abs(K).max()
    if scale == 0.0:
        return CanonicalForm(omega=omega, blocks=[])

    lam, U = np.linalg.eigh(1j * K)
    # eigenvalues of i K come in pairs +-B
    if np.abs(lam + lam[::-1]).max() > pairing_tol * max(1.0, scale):
        raise MethodFailure(f"eigenvalues of i omega^T R omega do not pair as +-B: {lam}")

    pos = [k for k in range(n) if lam[k] > zero_tol * scale]
    groups: list[list[int]] = []
    for k in sorted(pos, key=lambda k: -lam[k]):
        if groups and abs(lam[groups[-1][0]] - lam[k]) <= pairing_tol * max(1.0, scale):
            groups[-1].append(k)
        else:
            groups.append([k])

    blocks = []
    for grp in groups:
        P = np.zeros((n, n))
        E = np.zeros((n, n), complex)
        for k in grp:
            u = U[:, k]
            uu = np.outer(u, u.conj())
            # the -B eigenvector is conj(u); E = u u^H - conj(u) u^T
            P = P + 2.0 * uu.real
            E = E + 2j * uu.imag
        B = float(np.mean(lam[grp]))
        blocks.append(Block(B=B, P=P, E=E, mult=len(grp)))
    return CanonicalForm(omega=omega, blocks=blocks)


# -- scalar even functions ---------------------------------------------------

_PSI_COEFFS = np.array([2.0 ** (2 * k) * bernoulli(2 * SERIES_TERMS)[2 * k] / factorial(2 * k)
                        for k in range(SERIES_TERMS)])
_PHI_COEFFS = np.array([1.0 / (2 * k + 1) for k in range(SERIES_TERMS)])


def _even_series(coeffs, z):
    z2 = z * z
    out = np.zeros_like(z2)
    for c in coeffs[::-1]:
        out = out * z2 + c
    return out


def phi(z):
    """``tanh^{-1}(z)/z``; analytic off the real cuts ``|z| >= 1``."""
    z = np.asarray(z)
    real_cut = (np.abs(z.imag) == 0) & (np.abs(z.real) >= 1.0) if np.iscomplexobj(z) else np.abs(z) >= 1.0
    if np.any(real_cut):
        raise DomainError(f"tanh^-1(z)/z is singular for real |z| >= 1 (got {z[real_cut]!r})")
    small = np.abs(z) < SERIES_RADIUS
    safe = np.where(small, 0.5, z)
    return np.where(small, _even_series(_PHI_COEFFS, z), np.arctanh(safe) / safe)


def psi(z):
    """``z coth z``; entire on the real line."""
    z = np.asarray(z)
    small = np.abs(z) < SERIES_RADIUS
    safe = np.where(small, 1.0, z)
    return np.where(small, _even_series(_PSI_COEFFS, z), safe / np.tanh(safe))


def cosh_fn(z):
    return np.cosh(z)


def sinhc(z):
    """``sinh(z)/z``."""
    z = np.asarray(z)
    small = np.abs(z) < SERIES_RADIUS
    safe = np.where(small, 1.0, z)
    coeffs = np.array([1.0 / factorial(2 * k + 1) for k in range(SERIES_TERMS)])
    return np.where(small, _even_series(coeffs, z), np.sinh(safe) / safe)


@dataclass(frozen=True)
class EvenSeries:
    """User-supplied even power series ``sum_k c_k z^{2k}`` (truncated)."""
    coeffs: tuple[float, ...]

    def __call__(self, z):
        return _even_series(np.asarray(self.coeffs, dtype=complex), np.asarray(z, dtype=complex))


EVEN_FUNCTIONS: dict[str, Callable] = {
    "phi": phi,
    "psi": psi,
    "cosh": cosh_fn,
    "sinhc": sinhc,
}

# Taylor coefficients in z^{2k}, used by the series oracle and the matrix fallback.
EVEN_TAYLOR: dict[str, Callable[[int], float]] = {
    "phi": lambda k: 1.0 / (2 * k + 1),
    "psi": lambda k: float(2.0 ** (2 * k) * bernoulli(2 * k)[2 * k] / factorial(2 * k)),
    "cosh": lambda k: float(1.0 / factorial(2 * k)),
    "sinhc": lambda k: float(1.0 / factorial(2 * k + 1)),
}


def phi_psi_scalar(fn_id: str, z: float) -> float:
    if fn_id not in ("phi", "psi"):
        raise ValidationError(f"fn_id must be 'phi' or 'psi', got {fn_id!r}")
    val = EVEN_FUNCTIONS[fn_id](np.asarray(z))
    return float(np.real_if_close(val))


FunctionSpec = Union[str, Callable]


def _resolve(fn: FunctionSpec) -> Callable:
    if callable(fn):
        return fn
    try:
        return EVEN_FUNCTIONS[fn]
    except KeyError:
        raise ValidationError(f"unknown even function {fn!r}; known: {sorted(EVEN_FUNCTIONS)}") from None


def apply_even_function(fn: FunctionSpec, t: float, g, R, canon: CanonicalForm | None = None) -> np.ndarray:
    """Real matrix ``f(t g^{-1} iR)`` for an even analytic ``f``.

    ``fn`` is a key of ``EVEN_FUNCTIONS`` or any callable even in its argument.
    """
    f = _resolve(fn)
    if canon is None:
        canon = canonical_decompose(g, R)
    f0 = complex(f(np.asarray(0.0)))
    fvals = [complex(f(np.asarray(t * b.B))) for b in canon.blocks]
    out = canon.spectral(f0, fvals)
    if not np.all(np.isfinite(out)):
        raise MethodFailure("even matrix function produced non-finite entries")
    if np.abs(out.imag).max() > 1e-10 * max(1.0, np.abs(out).max()):
        raise MethodFailure("even matrix function is not real; the callable is probably not even")
    return out.real


def even_series_matrix(fn_id: str, t: float, g, R, tol: float = 1e-16, max_terms: int = 400) -> np.ndarray:
    """Truncated power series ``sum_k f_{2k} (t g^{-1} iR)^{2k}``.

    Independent of the canonical form; used as an oracle.
    """
    g = as_metric(g)
    R = as_curvature(R)
    X = t * np.linalg.solve(g, 1j * R)
    X2 = X @ X
    coeff = EVEN_TAYLOR[fn_id]
    term_pow = np.eye(len(g), dtype=complex)
    out = coeff(0) * term_pow
    for k in range(1, max_terms):
        term_pow = term_pow @ X2
        term = coeff(k) * term_pow
        out = out + term
        if np.abs(term).max() < tol * max(1.0, np.abs(out).max()):
            break
    else:
        raise MethodFailure(f"{fn_id} series did not converge in {max_terms} terms")
    return out.real
