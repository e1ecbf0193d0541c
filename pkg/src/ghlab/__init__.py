"""Numerical laboratory for torus-invariant Calabi-Yau metric ansatz work.

Subpackages:
    geometry    quadratic forms, base points, index sets, finite differences
    quadrature  adaptive orthant integration of singular power kernels
    locus       discriminant strata, projections, region decomposition
    kernels     potential kernels, closed forms, weak-limit checks
    ansatz      flat model, first order field jets, decay scans
    frame       metric assembly, volume and integrability residuals
    holo        holomorphic coordinate surrogates and growth checks
    glue        cutoffs, glue weights, eigenvalue extension profiles
"""

from .geometry import (
    BasePoint,
    IndexSet,
    QuadForm,
    anorm,
    ball_volume,
    block,
    fd_gradient,
    fd_hessian,
    laplace_A,
    schur_complement,
)
from .quadrature import (
    QuadratureError,
    QuadratureSpec,
    QuadResult,
    SingularityProximity,
    power_kernel_integral,
)
from .locus import (
    Projection,
    RegionConstants,
    RegionReport,
    all_strata,
    dist_boundary,
    dist_closed_stratum,
    dist_locus,
    project,
    region_membership,
    rho_IJ,
    zero_swap,
)
from .kernels import (
    KernelSpec,
    KernelValue,
    RadialBump,
    alpha,
    alpha_batch,
    alpha_grad,
    beta,
    closed_form_axis,
    kernel_prefactor,
    weak_distributional_check,
)
from .ansatz import (
    FieldJet,
    FirstOrderField,
    FlatFieldResult,
    FlatModelField,
    PerturbedField,
    Ray,
    RestrictedField,
    decay_scan,
    flat_field,
    restricted_remainders,
    sigma_expansion,
    weight_ell,
)
from .frame import (
    curvature_F,
    cy_residual,
    frame_at,
    grad_norm,
    integrability_residual,
    volume_ratio,
)
from .holo import (
    GammaSpec,
    gamma,
    gamma_closed_form,
    gamma_sum_check,
    gamma_via_ray,
    growth_bound_check,
    log_z,
    taubnut_moduli,
)
from .glue import (
    CutoffProfile,
    ExtensionProfile,
    extension_profile,
    glue_weight,
    profile_condition_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
