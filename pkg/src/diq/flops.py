"""Approximate FLOPs for dense training, inference, and LoRA fine-tuning.

All arithmetic uses Python integers, so results are exact for any shape;
training costs around 1e17 already exceed 53-bit float exactness.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["ModelShape", "flops_train", "flops_infer", "flops_lora", "to_1e14"]


@dataclass(frozen=True)
class ModelShape:
    """Transformer shape and workload for the cost formulas."""

    layers: int
    hidden: int
    tokens_per_sample: int
    num_samples: int
    epochs: int = 1
    lora_rank: int | None = None
    adapted_matrices: int | None = None

    def __post_init__(self):
        for name in ("layers", "hidden", "tokens_per_sample", "epochs"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.num_samples, int) or self.num_samples < 0:
            raise ValueError(
                f"num_samples must be a non-negative integer, got {self.num_samples!r}"
            )
        for name in ("lora_rank", "adapted_matrices"):
            v = getattr(self, name)
            if v is not None and (not isinstance(v, int) or v < 1):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")


def flops_train(shape: ModelShape) -> int:
    """6 * L * H^2 * T * |D| * E."""
    return (
        6
        * shape.layers
        * shape.hidden**2
        * shape.tokens_per_sample
        * shape.num_samples
        * shape.epochs
    )


def flops_infer(shape: ModelShape) -> int:
    """2 * L * H^2 * T * |D|  (epochs play no role in inference)."""
    return (
        2 * shape.layers * shape.hidden**2 * shape.tokens_per_sample * shape.num_samples
    )


def flops_lora(shape: ModelShape) -> int:
    """12 * k * L * H * rank * T * |D| * E.

    The quadratic dependency on the hidden size is replaced by a term
    linear in the adapter rank.
    """
    if shape.lora_rank is None or shape.adapted_matrices is None:
        raise ValueError("lora_rank and adapted_matrices are required for LoRA cost")
    return (
        12
        * shape.adapted_matrices
        * shape.layers
        * shape.hidden
        * shape.lora_rank
        * shape.tokens_per_sample
        * shape.num_samples
        * shape.epochs
    )


def to_1e14(flops: int) -> float:
    """Display unit used in cost-comparison plots."""
    return flops / 1e14
