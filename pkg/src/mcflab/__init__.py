"""mcflab: a desk-scale numerical laboratory for mean curvature flow in
higher codimension.

Evolves discretized immersions of compact submanifolds in flat ambient
spaces, monitors the calibration quantities preserved along the flow, and
provides the backward-heat-kernel density toolkit used in blow-up analysis.
"""

from .calibration import (
    CalibrationState,
    EtaMonitorResult,
    LagrangianMonitorResult,
    LagrangianState,
    RatioMonitorResult,
    apply_complex_structure,
    calibration_state,
    eta_monitor,
    graph_jacobian,
    lagrangian_angle,
    lagrangian_residuals,
    laplace_beltrami,
    omega_values,
    projection_jacobian,
    ratio_monitor,
    singular_values,
    star_alpha,
)
from .density import (
    DensitySeries,
    RegularityReport,
    SpacetimePoint,
    backward_heat_kernel,
    density_ratio,
    gaussian_density,
    monotonicity_audit,
    parabolic_rescale,
    regularity_report,
    shrinker_residual,
)
from .errors import (
    AmbientUnsupported,
    DegenerateMetric,
    GraphLost,
    InsufficientData,
    KBelowMu,
    MarginViolated,
    McflabError,
    NonFinite,
    ParseError,
    PhaseMarginViolated,
    RadiusTooSmall,
    TimeOrder,
    UnwrapAmbiguity,
    ValidationError,
    VersionMismatch,
)
from .flow import (
    FlowTrajectory,
    SingularityReport,
    StepPolicy,
    Termination,
    area_decay_residual,
    detect_singularity,
    run_flow,
    step_euler,
)
from .geometry import (
    EPS_DEG,
    GeometrySnapshot,
    area,
    geometry_snapshot,
    induced_metric,
    normal_projector,
    second_derivatives,
    second_fundamental_form,
    tangent_frames,
)
from .grid import Immersion, ParameterGrid
from .scenarios import (
    Expectation,
    PotentialTerm,
    Scenario,
    make_circle,
    make_ellipse,
    make_gradient_graph,
    make_shear_composition,
    make_torus_graph,
)
from .seriestools import MonotoneFlag, Series, monotone_flags, richardson_limit

__version__ = "0.1.0"
