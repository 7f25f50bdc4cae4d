"""First-order influence of training points on validation loss.

The per-step loss change of a validation point under one SGD step on a
training point is approximated by -eta * <g_train, g_val>.  Cumulative
influence over a trajectory of per-epoch checkpoints is

    I(z, z') = sum_i eta_i * <grad l(z'; theta_i), grad l(z; theta_i)>

with the sign convention that a positive value predicts a validation-loss
reduction.  Instance-level influence averages I(z, z') over a validation
set in stored order using compensated summation, so results are
bit-reproducible regardless of worker count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, Sample, SchemaError
from .models import ReferenceModel

__all__ = [
    "Checkpoint",
    "per_step_loss_delta_estimate",
    "pairwise_influence",
    "instance_influence",
    "score_dataset_influence",
    "sample_validation",
    "load_checkpoints",
    "write_checkpoints",
]


@dataclass(frozen=True)
class Checkpoint:
    """Parameters after one epoch, with that epoch's representative learning rate."""

    params: np.ndarray
    learning_rate: float
    epoch_index: int

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epoch_index < 1:
            raise ValueError(f"epoch_index must be >= 1, got {self.epoch_index}")
        params = np.asarray(self.params, dtype=float)
        if not np.all(np.isfinite(params)):
            raise ValueError("checkpoint parameters must be finite")
        object.__setattr__(self, "params", params)


def _check_checkpoints(checkpoints: Sequence[Checkpoint]) -> Sequence[Checkpoint]:
    if not checkpoints:
        raise ValueError("checkpoint sequence must be non-empty")
    for prev, cur in zip(checkpoints, checkpoints[1:]):
        if cur.epoch_index <= prev.epoch_index:
            raise ValueError("checkpoint epoch indices must be strictly increasing")
    return checkpoints


def per_step_loss_delta_estimate(g_train, g_val, eta: float) -> float:
    """First-order estimate of the one-step validation-loss change: -eta * <g_train, g_val>."""
    g_train = np.asarray(g_train, dtype=float)
    g_val = np.asarray(g_val, dtype=float)
    if g_train.shape != g_val.shape:
        raise ValueError(
            f"gradient dimension mismatch: {g_train.shape} vs {g_val.shape}"
        )
    if eta < 0:
        raise ValueError("eta must be >= 0")
    return -eta * float(g_train @ g_val)


def pairwise_influence(
    model: ReferenceModel,
    checkpoints: Sequence[Checkpoint],
    z: Sample,
    z_prime: Sample,
) -> float:
    """Cumulative influence of training point z on validation point z' over all checkpoints."""
    _check_checkpoints(checkpoints)
    terms = []
    for ckpt in checkpoints:
        g_z = model.gradient(ckpt.params, z)
        g_zp = model.gradient(ckpt.params, z_prime)
        terms.append(ckpt.learning_rate * float(g_zp @ g_z))
    return math.fsum(terms)


def instance_influence(
    model: ReferenceModel,
    checkpoints: Sequence[Checkpoint],
    z: Sample,
    val: Sequence[Sample],
) -> float:
    """Mean influence of z over the validation set, accumulated in stored order."""
    if not val:
        raise ValueError("validation set must be non-empty")
    pairs = [pairwise_influence(model, checkpoints, z, zp) for zp in val]
    return math.fsum(pairs) / len(val)


def score_dataset_influence(
    model: ReferenceModel,
    checkpoints: Sequence[Checkpoint],
    train: Dataset | Sequence[Sample],
    val: Sequence[Sample],
    workers: int = 1,
) -> dict[str, float]:
    """Instance-level influence for every training sample.

    Validation gradients are computed once per checkpoint and shared
    read-only.  The result is keyed in training order and independent of
    the worker count: accumulation order is fixed per sample.
    """
    _check_checkpoints(checkpoints)
    if not val:
        raise ValueError("validation set must be non-empty")
    train = list(train)
    if not train:
        raise ValueError("training set must be non-empty")

    val_grads = [
        [model.gradient(ckpt.params, zp) for zp in val] for ckpt in checkpoints
    ]

    def score_one(z: Sample) -> float:
        try:
            train_grads = [model.gradient(ckpt.params, z) for ckpt in checkpoints]
            # same accumulation order as instance_influence: over checkpoints
            # per validation point, then over validation points
            pairs = [
                math.fsum(
                    ckpt.learning_rate * float(grads[j] @ g_z)
                    for ckpt, grads, g_z in zip(checkpoints, val_grads, train_grads)
                )
                for j in range(len(val))
            ]
            return math.fsum(pairs) / len(val)
        except Exception as exc:
            raise type(exc)(f"sample {z.id!r}: {exc}") from exc

    if workers <= 1:
        scores = [score_one(z) for z in train]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(score_one, train))
    return {z.id: s for z, s in zip(train, scores)}


def sample_validation(
    pools: Sequence[Sequence[Sample]],
    k: int = 20,
    seed: int = 0,
) -> list[Sample]:
    """Draw min(k, |pool|) samples uniformly without replacement from each pool.

    Pools are concatenated in input order; the draw is deterministic for a
    fixed seed.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if all(len(pool) == 0 for pool in pools):
        raise ValueError("all validation pools are empty")
    rng = np.random.default_rng(seed)
    out: list[Sample] = []
    for pool in pools:
        pool = list(pool)
        if not pool:
            continue
        m = min(k, len(pool))
        idx = rng.choice(len(pool), size=m, replace=False)
        out.extend(pool[i] for i in idx)
    return out


def write_checkpoints(checkpoints: Sequence[Checkpoint], path) -> None:
    """Checkpoint file: a header record followed by one record per checkpoint."""
    _check_checkpoints(checkpoints)
    dim = checkpoints[0].params.size
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(json.dumps({"param_dim": dim, "epochs": len(checkpoints)}) + "\n")
        for ckpt in checkpoints:
            rec = {
                "epoch_index": ckpt.epoch_index,
                "learning_rate": ckpt.learning_rate,
                "params": ckpt.params.tolist(),
            }
            f.write(json.dumps(rec) + "\n")


def load_checkpoints(path) -> list[Checkpoint]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open("r", encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise SchemaError("empty checkpoint file")
    header = json.loads(lines[0])
    if "param_dim" not in header or "epochs" not in header:
        raise SchemaError("checkpoint header must declare param_dim and epochs")
    dim = int(header["param_dim"])
    checkpoints = []
    for lineno, line in enumerate(lines[1:], 2):
        rec = json.loads(line)
        params = np.asarray(rec["params"], dtype=float)
        if params.size != dim:
            raise SchemaError(
                f"checkpoint param dim {params.size} != header param_dim {dim}",
                lineno,
            )
        checkpoints.append(
            Checkpoint(
                params=params,
                learning_rate=float(rec["learning_rate"]),
                epoch_index=int(rec["epoch_index"]),
            )
        )
    if len(checkpoints) != int(header["epochs"]):
        raise SchemaError(
            f"header declares {header['epochs']} checkpoints, found {len(checkpoints)}"
        )
    return _check_checkpoints(checkpoints)
