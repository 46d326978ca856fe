from .grid import DEFAULT_MAX_NODES, GradientField, Grid, WaveField, build_grid
from .io import export_wavefield_csv, load_wavefield, save_wavefield, wavefield_frame
from .operators import (
    EdgeDifferences,
    HelmholtzOperator,
    apply_helmholtz_operator,
    diamagnetic_gap,
    edge_differences,
    edge_midpoints,
    gaussian_bump,
    link_phases,
    magnetic_gradient,
    radial_tangential_split,
)
