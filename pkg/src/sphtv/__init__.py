"""Total-variation inpainting on the sphere with MW and DH equiangular sampling."""

from sphtv.grid import (
    SamplingScheme,
    SphereGrid,
    QuadratureWeights,
    build_grid,
    quadrature_weights,
    integrate,
    upsampled_grid,
)
from sphtv.wigner import DeltaTable, build_delta_table
from sphtv.harmonic import (
    MWTransform,
    DHTransform,
    get_transform,
    mw_inverse,
    mw_forward,
    mw_inverse_adjoint,
    mw_forward_adjoint,
    dh_inverse,
    dh_forward,
    conj_sym_extend,
    conj_sym_restrict,
    band_limit,
    elm2ind,
    ind2elm,
)
from sphtv.gradient import (
    GradientField,
    delta_theta,
    delta_theta_adjoint,
    delta_phi,
    delta_phi_adjoint,
    weighted_gradient,
    weighted_gradient_adjoint,
    gradient_magnitude,
    tv_norm,
)

__version__ = "0.1.0"
