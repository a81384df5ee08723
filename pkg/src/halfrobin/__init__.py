"""Boundary reduction and Schatten-class diagnostics for half-space Robin Laplacians."""
from .grid import (
    BoundaryGrid,
    BoundaryOperator,
    CoefficientSpec,
    FourierMultiplier,
    GridFunction,
    apply_multiplier,
    make_grid,
    operator_matrix,
    pointwise_multiply,
    sample_coefficient,
)
from .halfspace import (
    EigenvalueRecord,
    birman_schwinger_matrix,
    boundary_reduced_difference,
    bs_characteristic,
    cwikel_matrix,
    essential_bottom,
    find_eigenvalues,
    gram_sqrt_multiplier,
    hansmann_sum,
    weyl_multiplier,
)
from .schatten import (
    SingularSpectrum,
    epsilon_count,
    fit_decay_exponent,
    schatten_norm,
    singular_values,
    verdict,
    weak_quasinorm,
)

__version__ = "0.1.0"
