"""FFT fixed-point homogenization of two-phase periodic conductors.

Computes effective conductivity and interior fields on a periodic pixel
grid with four fixed-point schemes; the substituted variants exploit a
known confinement of the singularities of the effective conductivity to
an interval of the negative real axis to converge faster.
"""

from .analysis import (
    SQUARE_ARRAY_CUT,
    MisestimationReport,
    MisestimationRun,
    RateGrid,
    misestimation_report,
    obnosov,
    obnosov_on_branch_cut,
    predicted_rate,
    rate_contours,
)
from .errors import (
    BranchCutError,
    ConfigError,
    ContractError,
    DegenerateParamError,
    IntervalError,
    PoleError,
    RasterParseError,
    SupportError,
)
from .geometry import (
    PhaseMap,
    build_disk_array,
    build_square_array,
    build_uniform,
    load_raster,
    save_raster,
    volume_fraction,
)
from .solvers import (
    ConvergenceHistory,
    HistoryRecord,
    SolveResult,
    SolverConfig,
    TerminationStatus,
    equilibrium_residual,
    equilibrium_residual_aug,
    estimate_rate,
    extract_sigma_star,
    extract_sigma_star_aug,
    recover_physical_fields,
    solve,
    solve_basic,
    solve_basic_sub,
    solve_em,
    solve_em_sub,
)
from .spectral_ops import (
    AugmentedField,
    VectorField,
    apply_chi_aug,
    apply_local_A,
    gamma0,
    gamma0_aug,
    gamma1,
    gamma1_aug,
    inner,
    inner_aug,
    invert_shifted_A,
    norm,
    norm_aug,
)
from .transform import (
    SchemeKind,
    SpectralInterval,
    SubstitutionParams,
    aux_constants,
    compound_resistance,
    inverse_map_t,
    map_t,
    map_z,
    resistor_substitution_map,
    solve_p,
    verify_sigma1,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedField",
    "BranchCutError",
    "ConfigError",
    "ContractError",
    "ConvergenceHistory",
    "DegenerateParamError",
    "HistoryRecord",
    "IntervalError",
    "MisestimationReport",
    "MisestimationRun",
    "PhaseMap",
    "PoleError",
    "RasterParseError",
    "RateGrid",
    "SQUARE_ARRAY_CUT",
    "SchemeKind",
    "SolveResult",
    "SolverConfig",
    "SpectralInterval",
    "SubstitutionParams",
    "SupportError",
    "TerminationStatus",
    "VectorField",
    "apply_chi_aug",
    "apply_local_A",
    "aux_constants",
    "build_disk_array",
    "build_square_array",
    "build_uniform",
    "compound_resistance",
    "equilibrium_residual",
    "equilibrium_residual_aug",
    "estimate_rate",
    "extract_sigma_star",
    "extract_sigma_star_aug",
    "gamma0",
    "gamma0_aug",
    "gamma1",
    "gamma1_aug",
    "inner",
    "inner_aug",
    "inverse_map_t",
    "invert_shifted_A",
    "load_raster",
    "map_t",
    "map_z",
    "misestimation_report",
    "norm",
    "norm_aug",
    "obnosov",
    "obnosov_on_branch_cut",
    "predicted_rate",
    "rate_contours",
    "recover_physical_fields",
    "resistor_substitution_map",
    "save_raster",
    "solve",
    "solve_basic",
    "solve_basic_sub",
    "solve_em",
    "solve_em_sub",
    "solve_p",
    "verify_sigma1",
    "volume_fraction",
]
