"""depthlab: affine-invariant depth alignment, losses, pseudo-label curation,
zero-shot evaluation, and sparse ordinal-depth benchmarking."""

from .alignment import AlignmentParams, align, fit_scale_shift_lsq, fit_scale_shift_robust
from .depthio import (
    DatasetRole,
    DepthFormat,
    DepthKind,
    DepthMap,
    ManifestEntry,
    PredictionManifest,
    from_values,
    load_depth,
    load_manifest,
    load_mask,
    save_depth,
    save_mask,
    to_depth,
    to_inverse,
)
from .losses import (
    LossConfig,
    LossReport,
    combined_loss,
    feature_alignment_loss,
    gradient_matching_loss,
    ssi_loss,
)
from .curation import CurationConfig, CurationReport, LossKind, curate_dataset, mask_top_loss
from .metrics import (
    AlignmentMethod,
    AlignmentSpace,
    EvalConfig,
    MetricReport,
    compare_label_sources,
    depth_metrics,
    evaluate_dataset,
    evaluate_image,
)
from .benchmark import (
    AccuracyReport,
    BenchmarkManifest,
    ImageInfo,
    Keypoint,
    PairLabel,
    PairOrigin,
    PointPair,
    VotingConfig,
    build_benchmark,
    load_benchmark,
    pair_accuracy,
    sample_pairs,
    vote,
)
from .annotation import AnnotationService, Decision, PairStatus, replay_log
from .synthgen import FakeKind, SceneSpec, fake_model, random_scene, render_depth

__version__ = "0.1.0"
