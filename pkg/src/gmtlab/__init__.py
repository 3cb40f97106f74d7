"""Plane geometric measure theory at desk scale: dyadic covering numbers,
discretized point and line sets, Frostman-type measures, tube families,
point-line incidences, and projection experiments.
"""

from .covering import (
    DeltaSCheck,
    DimensionEstimate,
    box_dimension,
    circle_box_dimension,
    circle_covering_number,
    covering_number,
    fit_log2_slope,
    frostman_extract,
    hausdorff_content,
    per_scale_counts,
    verify_delta_s_set,
)
from .dyadic import cell_indices, count_cells, is_dyadic, level_of
from .errors import (
    AllCollinear,
    AllMassAtCenter,
    CollinearX,
    ConfigInvalid,
    DegeneratePair,
    EmptyInput,
    GmtlabError,
    InvariantViolation,
    LowDimY,
    PreconditionError,
    ScaleRangeTooNarrow,
    SeparationViolated,
    TooFewPoints,
    TooManyPoints,
    VerticalLine,
)
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    Target,
    erdos_beck_profile,
    furstenberg_count,
    line_set_dimension,
    orthogonal_exceptional_profile,
    radial_dimension_profile,
)
from .generators import (
    DiscreteSet,
    IfsSystem,
    cantor_middle_thirds,
    circle_set,
    four_corner_product,
    gen_grid,
    gen_ifs,
    gen_planted_collinear,
    gen_random_delta_s_set,
    segment_set,
)
from .geometry import Ball, Line, Point, Tube, line_distance, lines_equal
from .incidence import (
    BeckReport,
    IncidenceReport,
    LineSet,
    beck_analyze,
    incidence_count,
    rich_lines,
    spanned_lines,
    weak_dirac_stat,
)
from .measures import (
    DirectionMeasure,
    FrostmanFit,
    WeightedMeasure,
    ball_mass,
    energy,
    frostman_fit,
    mass_shell_decompose,
    radial_pushforward,
    tube_mass,
)
from .tubes import (
    FuRenInstance,
    ThinTubeAudit,
    TubeFamily,
    bootstrap_schedule,
    containment_multiplicity,
    fu_ren_audit,
    heaviest_tube,
    sample_probe_tubes,
    thin_tube_audit,
    tube_mass_exponent,
    uniform_tube_family,
    verify_tube_set,
)

__version__ = "0.1.0"

__all__ = [
    "AllCollinear",
    "AllMassAtCenter",
    "Ball",
    "BeckReport",
    "CollinearX",
    "ConfigInvalid",
    "DegeneratePair",
    "DeltaSCheck",
    "DimensionEstimate",
    "DirectionMeasure",
    "DiscreteSet",
    "EmptyInput",
    "ExperimentResult",
    "ExperimentSpec",
    "FrostmanFit",
    "FuRenInstance",
    "GmtlabError",
    "IfsSystem",
    "IncidenceReport",
    "InvariantViolation",
    "Line",
    "LineSet",
    "LowDimY",
    "Point",
    "PreconditionError",
    "ScaleRangeTooNarrow",
    "SeparationViolated",
    "Target",
    "ThinTubeAudit",
    "TooFewPoints",
    "TooManyPoints",
    "Tube",
    "TubeFamily",
    "VerticalLine",
    "WeightedMeasure",
    "ball_mass",
    "beck_analyze",
    "bootstrap_schedule",
    "box_dimension",
    "cantor_middle_thirds",
    "cell_indices",
    "circle_box_dimension",
    "circle_covering_number",
    "circle_set",
    "containment_multiplicity",
    "count_cells",
    "covering_number",
    "energy",
    "erdos_beck_profile",
    "fit_log2_slope",
    "four_corner_product",
    "frostman_extract",
    "frostman_fit",
    "fu_ren_audit",
    "furstenberg_count",
    "gen_grid",
    "gen_ifs",
    "gen_planted_collinear",
    "gen_random_delta_s_set",
    "hausdorff_content",
    "heaviest_tube",
    "incidence_count",
    "is_dyadic",
    "level_of",
    "line_distance",
    "line_set_dimension",
    "lines_equal",
    "mass_shell_decompose",
    "orthogonal_exceptional_profile",
    "per_scale_counts",
    "radial_dimension_profile",
    "radial_pushforward",
    "rich_lines",
    "sample_probe_tubes",
    "segment_set",
    "spanned_lines",
    "thin_tube_audit",
    "tube_mass",
    "tube_mass_exponent",
    "uniform_tube_family",
    "verify_delta_s_set",
    "verify_tube_set",
    "weak_dirac_stat",
]
