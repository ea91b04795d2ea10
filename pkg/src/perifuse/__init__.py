"""Verification protocols, score-level fusion, EER evaluation, and heatmap
divergence analysis for periocular biometrics experiments.

The package operates on precomputed embedding templates and relevance maps;
no neural network ever runs in-process. Heavy pairwise kernels use numba
when available and fall back to NumPy (see ``perifuse._accel``; the
``PERIFUSE_NUMBA`` environment variable forces the fallback lane).
"""

from ._accel import BACKEND
from .datamodel import (
    DatasetManifest,
    EmbeddingTemplate,
    Heatmap,
    SampleKey,
    TemplateSet,
    ingest_heatmap,
    ingest_templates,
    read_manifest,
    sample_key_from_stem,
    sample_key_stem,
    write_heatmap,
    write_manifest,
    write_templates,
)
from .divergence import (
    DivergencePoint,
    ProbabilityMap,
    average_by_distance,
    average_heatmap,
    extreme_images,
    jsd,
    kl,
    normalize,
    pairwise_cloud,
    pearson,
)
from .errors import (
    AlignmentError,
    CompletenessError,
    DegenerateInputError,
    DimensionError,
    DomainError,
    DuplicateKeyError,
    ParseError,
    ScorerError,
    SingularityError,
    TemplateLookupError,
    ToolkitError,
    UsageError,
)
from .evaluation import (
    EvalResult,
    RocPoint,
    compute_eer,
    group_eval,
    relative_change,
    roc_curve,
)
from .fusion import (
    FusionModel,
    apply_fusion,
    crossval_fused_scores,
    fusion_loss,
    read_fusion_model,
    subject_disjoint_folds,
    train_fusion,
    write_fusion_model,
)
from .geometry import CropBox, face_crop_valid, sclera_crop_box
from .lime import (
    ExternalCommandScorer,
    LimeConfig,
    MaskSample,
    PlantedLinearScorer,
    SegmentationGrid,
    SurrogateFit,
    coefficients_to_heatmap,
    explain,
    explain_full,
    fit_surrogate,
    sample_masks,
)
from .metrics import (
    ScoreSet,
    chi2_distance,
    cosine_similarity,
    read_scores,
    score_pairs,
    write_scores,
)
from .protocol import (
    ComparisonPair,
    ProtocolSet,
    cross_genuine,
    distance_combinations,
    full_protocol,
    impostors,
    intra_genuine,
    protocol_totals,
    read_protocol,
    write_protocol,
)
from .reporting import (
    ReportEntry,
    ReportTable,
    build_report,
    panel_points,
    render_polyline_svg,
    write_report_csv,
    write_report_markdown,
    write_series_csv,
)
from .synth import complementary_scores, synth_dataset, write_synth_dataset

__version__ = "0.1.0"
