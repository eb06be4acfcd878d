"""Heat semigroups of constant-field magnetic Laplacians and their products.

Closed-form matrix formulas for the heat kernel of ``g^{ij} nabla_i nabla_j``
with ``[nabla_j, nabla_k] = i R_jk``, products of two such semigroups, and the
oracles (quadrature, exact Weyl-algebra arithmetic, nilpotent
Campbell-Hausdorff models) used to check them.
"""
from .curvature import apply_even_function, canonical_decompose, phi, psi
from .errors import DivergenceError, DomainError, MethodFailure, ValidationError, WeylHeatError
from .kernels import GaussianKernel, convolve, evaluate, heat_kernel, product_kernel, trace_product
from .semigroup import heat_matrices, product_from_config, product_matrices

__all__ = [
    "DivergenceError", "DomainError", "GaussianKernel", "MethodFailure", "ValidationError",
    "WeylHeatError", "apply_even_function", "canonical_decompose", "convolve", "evaluate",
    "heat_kernel", "heat_matrices", "phi", "product_from_config", "product_kernel",
    "product_matrices", "psi", "trace_product",
]
