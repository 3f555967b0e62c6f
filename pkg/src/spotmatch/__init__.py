"""Deterministic pseudo-label assignment and loss-modulation engine for text spotting."""

from .assignment import (
    AssignmentError,
    HierarchicalLabels,
    PsaConfig,
    assign,
    joint_constraint_filter,
    recognition_filter,
)
from .geometry import (
    CenterLine,
    GeometryError,
    Polygon,
    SelfIntersectionError,
    center_points,
    is_simple,
    polygon_area,
    polygon_diou,
    polygon_iou,
)
from .harness import (
    CorrelationReport,
    EvalReport,
    HarnessError,
    SynthConfig,
    correlation_report,
    detection_prf,
    e2e_hmean,
    evaluate,
    synth_corpus,
    synth_scene,
)
from .matching import (
    CostBreakdown,
    MatchedPair,
    MatchingError,
    MatchResult,
    PredictionSet,
    TextInstance,
    coord_cost,
    cost_matrix,
    focal_cost,
    hungarian,
    one_to_many_assign,
    solve_assignment,
    text_cost,
)
from .mms import (
    FactorSet,
    LossTerms,
    MmsError,
    PairFactors,
    compute_factors,
    crc_factor,
    ema_update,
    sci_factor,
    unsupervised_loss,
)
from .textmetrics import (
    Alphabet,
    TextMetricsError,
    instance_confidence,
    levenshtein,
    text_disparity,
)

__version__ = "0.1.0"
