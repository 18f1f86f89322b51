"""holoforge: a toolkit for subsurface microwave holography datasets.

The pipeline runs scan gridding -> angular-spectrum inversion -> hologram
fusion -> dataset generation, with bit-exact container formats and a
manifest that makes every generated sample auditable.
"""

from .angular import (
    AngularSpectrumPropagator,
    C_MM_PER_S,
    DEFAULT_FREQUENCY_HZ,
    DepthFocuser,
    EPS_R_AIR,
    EPS_R_SOIL,
    FocusDepth,
    PropagationParams,
    focus_depth,
    propagate,
    reconstruct_volume,
    wavenumber_grid,
)
from .annotations import (
    AnnotationError,
    BBox,
    make_annotation,
    rle_decode,
    rle_encode,
)
from .dataset import (
    BACKGROUND_LABEL,
    DatasetManifest,
    GenerationError,
    ManifestError,
    MINE_LABEL,
    NON_MINE_LABEL,
    SampleRecord,
    SplitAssignment,
    SplitSpec,
    TASKS,
    discover_outdoor,
    enumerate_indoor,
    enumerate_outdoor,
    generate_dataset,
    make_labels,
    split_config_grouped,
    split_object_disjoint,
    split_records,
    validate_manifest,
)
from .fusion import (
    AlphaCalibrator,
    AlphaSweepResult,
    DEFAULT_ALPHA,
    DEFAULT_SWEEP_GRID,
    HologramFuser,
    VOLUME_PRESET_ALPHA,
    alpha_from_permittivity,
    calibrate_alpha,
    correlation_score,
    fuse,
    fuse_volume,
)
from .gridding import GriddingError, GridSpec, ScanGridder, grid_scan
from .io import (
    FormatError,
    checksum_bytes,
    checksum_file,
    decode_field,
    decode_volume,
    default_registry,
    encode_field,
    encode_volume,
    indoor_scan_name,
    load_registry,
    outdoor_scan_name,
    parse_registry,
    read_alpha_sweep,
    read_field,
    read_json_doc,
    read_scan,
    read_volume,
    registry_to_doc,
    render_png,
    sniff_container,
    write_alpha_sweep,
    write_field,
    write_json_doc,
    write_scan,
    write_volume,
)
from .metrics import MetricUndefinedWarning, f1, f1_micro, f1_score, precision, recall
from .model import (
    CARDINALS,
    CATEGORIES,
    CircleFootprint,
    ComplexField2D,
    ComplexVolume,
    DEFAULT_PITCH_MM,
    INDOOR_HEIGHTS_MM,
    INDOOR_SLOPES_DEG,
    IndoorConfig,
    ObjectRegistry,
    ObjectSpec,
    OutdoorConfig,
    RectFootprint,
    ScanTrace,
    amplitude,
    field_from_amp_phase,
    phase,
)

__version__ = "0.1.0"
