"""Difficulty-influence quadrant (DIQ) data selection toolkit."""

from .data import (
    Dataset,
    DifficultyScores,
    Sample,
    SchemaError,
    ScoreTable,
    ScoredSample,
    ValidationReport,
    load_dataset,
    load_scores,
    validate_scores,
    write_dataset,
    write_scores,
)
from .flops import ModelShape, flops_infer, flops_lora, flops_train
from .influence import (
    Checkpoint,
    instance_influence,
    load_checkpoints,
    pairwise_influence,
    per_step_loss_delta_estimate,
    sample_validation,
    score_dataset_influence,
    write_checkpoints,
)
from .models import (
    LinearModel,
    LogisticModel,
    TanhNetModel,
    decode_sample,
    encode_sample,
    gradient_check,
)
from .selector import (
    QuadrantSelector,
    SelectionConfig,
    SelectionManifest,
    assign_quadrant,
    influence_median,
    select,
    write_manifest,
    write_subset,
)

__version__ = "0.1.0"
