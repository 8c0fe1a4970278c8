"""Finite-dimensional laboratory for local operations, commutants and entanglement."""

from .algebra import (
    LatticeNet,
    OperatorAlgebra,
    center_and_factor,
    commutant,
    diagonal_algebra,
    factor_algebra,
    full_algebra,
    generate_algebra,
    is_abelian_projection,
    is_cyclic_vector,
    is_separating_vector,
    left_ideal_basis,
    net_algebra,
    support_projection,
)
from .entanglement import (
    SeparabilityVerdict,
    decide_entanglement,
    entanglement_entropy,
    local_preparation_channel,
    nondegenerate_disentangler,
    ppt_verdict,
    projective_disentangler,
    separable_approximation,
)
from .numerics import (
    hermitian_eig,
    norms,
    partial_trace,
    schmidt_decompose,
    tensor_product,
)
from .operations import (
    KrausOperation,
    apply_heisenberg,
    apply_schrodinger,
    compose,
    factorization_check,
    is_local_to,
    lift_local,
    mixture_decomposition,
    update_state,
)
from .states import (
    ProductCertificate,
    StateFunctional,
    expectation,
    is_product_state,
    norm_distance,
    vector_state,
)

__version__ = "0.1.0"

__all__ = [
    "LatticeNet",
    "OperatorAlgebra",
    "center_and_factor",
    "commutant",
    "diagonal_algebra",
    "factor_algebra",
    "full_algebra",
    "generate_algebra",
    "is_abelian_projection",
    "is_cyclic_vector",
    "is_separating_vector",
    "left_ideal_basis",
    "net_algebra",
    "support_projection",
    "SeparabilityVerdict",
    "decide_entanglement",
    "entanglement_entropy",
    "local_preparation_channel",
    "nondegenerate_disentangler",
    "ppt_verdict",
    "projective_disentangler",
    "separable_approximation",
    "hermitian_eig",
    "norms",
    "partial_trace",
    "schmidt_decompose",
    "tensor_product",
    "KrausOperation",
    "apply_heisenberg",
    "apply_schrodinger",
    "compose",
    "factorization_check",
    "is_local_to",
    "lift_local",
    "mixture_decomposition",
    "update_state",
    "ProductCertificate",
    "StateFunctional",
    "expectation",
    "is_product_state",
    "norm_distance",
    "vector_state",
]
