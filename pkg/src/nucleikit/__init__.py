"""nucleikit: Voronoi label masks from nuclei point annotations,
posterior-map center detection, and Hungarian-matching evaluation."""

__version__ = "0.1.0"

from .model import (
    BACKGROUND,
    CENTER,
    CLASS_NAMES,
    EDGE,
    OBJECT,
    AnnotationError,
    AnnotationSet,
    FixtureError,
    GrayImage,
    LabelMask,
    ManifestError,
    NucleikitError,
    PmapFormatError,
    PosteriorMap,
    ResolutionSpec,
    Thresholds,
    ValidationError,
    WeightMap,
)
from .io import (
    read_annotations,
    read_gray_image,
    read_label_mask,
    read_pmap,
    write_annotations,
    write_gray_image,
    write_label_mask,
    write_pmap,
)
from .manifest import (
    DatasetManifest,
    ManifestEntry,
    TrainingPair,
    compose_training_set,
    load_manifest,
)
from .voronoi import (
    CellIndexMap,
    LabelParams,
    NeighborDistances,
    assign_cells,
    generate_label_mask,
    generate_weight_map,
    neighbor_max_distance,
)
from .normalize import normalize_linear
from .detect import (
    DetectionSet,
    EstimatedCells,
    detect_centers,
    estimate_cells,
    read_detections,
    write_detections,
)
from .matching import (
    MatchResult,
    Metrics,
    aggregate_micro,
    compute_metrics,
    match_hungarian,
)
from .tuning import GridSpec, grid_search
from .fixtures import (
    FixtureSpec,
    generate_dataset,
    make_variants,
    render_image,
    render_posteriors,
    sample_layout,
)
from .report import paired_t_test, report_curves
