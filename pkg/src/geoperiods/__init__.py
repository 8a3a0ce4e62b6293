"""geoperiods: eigenfunction periods along curves on model surfaces.

A desk-scale numerical workbench: model surfaces of nonpositive curvature
(plus a comparison sphere), limiting-circle curvature via Riccati equations,
closed curves with Fermi charts, frequency-ratio admissibility sets,
exact model eigenfunctions, generalized-period quadrature, and oscillatory
phase-function checks, wrapped in a reproducible CLI.
"""

__version__ = "0.1.0"

from .eigenfun import (
    HyperbolicWaveSum,
    SphereHighestWeight,
    SphereZonal,
    TorusWave,
    eigenfunction_from_config,
    evaluate,
    laplacian_residual,
    random_wave_sum,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    EscapeError,
    FrequencyGridError,
    GeoperiodsError,
    ProximityError,
    RangeError,
    UnderflowError,
    UnsupportedSurfaceError,
)
from .admissibility import (
    AdmissibilityReport,
    admissible_eps,
    margin_at,
    report_from_samples,
)
from .phase import (
    ConeWeights,
    CriticalPoint,
    PhaseGrid,
    StationarityReport,
    cone_classify,
    critical_points,
    phase,
    phase_gradient,
    phase_hessian,
    stationarity_check,
)
from .config import (
    SCHEMA_VERSION,
    SUBCOMMANDS,
    canonical_json,
    config_hash,
    load_config,
    validate_config,
)
from .runner import (
    ResultBundle,
    run_admissibility,
    run_decay_scan,
    run_experiment,
    run_limiting_curvature,
    run_periods_scan,
    run_phase_check,
)
from .curve import (
    Curve,
    FermiChart,
    curve_from_config,
    curve_from_csv,
    fermi_coordinates,
    geodesic_circle,
    geodesic_curvature,
    perturbed_circle,
    signed_normal_curvature,
    torus_geodesic,
)
from .jacobi import (
    GeodesicRay,
    RiccatiTrace,
    circle_curvature,
    jacobi_solve,
    limiting_circle_curvature,
    stable_riccati,
)
from .periods import (
    PeriodResult,
    PeriodSpectrum,
    generalized_period,
    period_spectrum,
)
from .surface import (
    ConformalField,
    ConformalSurface,
    DeckTransform,
    FlatTorus,
    HyperbolicMobius,
    HyperbolicPlane,
    RoundSphere,
    SurfacePoint,
    TangentVec,
    TorusTranslation,
    apply_deck,
    deck_from_config,
    distance,
    gaussian_curvature,
    geodesic_flow,
    half_plane_field,
    metric_at,
    poincare_disk_field,
    surface_from_config,
)

__all__ = [name for name in dir() if not name.startswith("_")]
