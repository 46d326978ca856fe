from .manufactured import MATRIX_COLUMNS, manufactured_pair, verification_matrix
from .morawetz import IdentityKind, IdentityResidual, apriori_check, check_consistency, identity_residual
from .multipliers import (
    Multiplier,
    MultiplierKind,
    PhiConstant,
    PhiThetaOverR,
    PsiEikonal,
    PsiQ,
    RadialPsi,
    multiplier_catalog,
    q_profile,
    smoothstep,
)
