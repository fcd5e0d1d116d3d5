"""Difference-imaging parking-lot occupancy detection with multiple RIS panels."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    InvalidLayoutError,
    ParkingLayout,
    PlanarArray,
    Point3,
    RoiGrid,
    Scene,
    build_grid,
    build_parking_layout,
    build_ris_array,
    build_scene,
)
from .channel import (  # noqa: E402
    DegenerateGeometryError,
    RadioConfig,
    SensingMatrix,
    build_sensing_matrix,
    load_matrix,
    pairwise_channel,
    save_matrix,
    sensing_row,
    sensing_row_bruteforce,
    steering_vector,
)
from .measurement import (  # noqa: E402
    MeasurementSet,
    PhaseSchedule,
    ScatteringScene,
    acquire,
    add_noise,
    arrive,
    difference,
    generate_phase_schedule,
    generate_scene,
    synthesize_occupied,
    synthesize_reference,
)
from .recovery import (  # noqa: E402
    DifferenceImage,
    SpConfig,
    exhaustive_recover,
    least_squares_on_support,
    sp_recover,
)
from .detection import (  # noqa: E402
    DetectionConfig,
    MetricsReport,
    aggregate,
    classify_spaces,
    classify_units,
    compute_metrics,
)
from .harness import (  # noqa: E402
    ConfigError,
    ExperimentConfig,
    ExperimentResult,
    load_config,
    run_sweep,
    run_trial,
    write_results,
)
