from .concentration import (
    AngularProfile,
    angular_profile,
    apriori_bound_ratio,
    check_angular,
    concentration_functional,
    concentration_ratio,
    tangential_energy,
)
from .hypotheses import any_violated, beta_indicator, beta_profile, fit_decay_exponent, hypothesis_report
from .norms import default_norm_offset, dual_norm, dual_norm_terms, dyadic_shell_masses, field_density, mc_norm
from .radiation import PhaseMode, explicit_phase_gap, radiation_functional, sommerfeld_terms, weighted_radiation_terms
from .reports import CSV_COLUMNS, FunctionalName, FunctionalReport, Verdict, reports_frame
