from .angular import AngularGrid, build_angular_grid, double_sphere_extension
from .curvature import (
    CurvatureReport,
    SmallnessProfile,
    curvature_report,
    hessian_F,
    index_gradient_residual,
    smallness_profile,
)
from .marching import (
    EikonalSolution,
    eikonal_residual,
    g_infinity_check,
    march_g,
    radial_speed,
    shell_residuals,
)
from .phases import Phase, RadialPhase, SaitoPhase, saito_coefficients, saito_exact
