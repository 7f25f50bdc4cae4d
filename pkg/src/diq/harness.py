"""Desk-scale end-to-end validation harness.

Synthesizes regression / binary-classification datasets with a controllable
per-sample noise scale, trains reference models by per-sample SGD to produce
per-epoch checkpoints, computes exact one-step influence oracles, and runs
paired comparisons of quadrant-selected subsets against random subsets of
equal size.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset, DifficultyScores, Sample, ScoreTable, ScoredSample
from .influence import Checkpoint, sample_validation, score_dataset_influence
from .models import LinearModel, LogisticModel, ReferenceModel, encode_sample
from .selector import SelectionConfig, select

__all__ = [
    "SyntheticSpec",
    "TrainRun",
    "ComparisonReport",
    "generate_synthetic",
    "difficulty_from_hardness",
    "build_score_table",
    "constant_schedule",
    "cosine_schedule",
    "train_sgd",
    "oracle_influence",
    "compare_selection",
    "write_report",
]

TASKS = ("regression", "binary-classification")


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator settings for one synthetic dataset family."""

    task: str = "binary-classification"
    n_train: int = 2000
    n_val: int = 200
    feature_dim: int = 10
    noise_low: float = 0.0
    noise_high: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}")
        if self.n_train < 10:
            raise ValueError("n_train must be >= 10")
        if self.n_val < 1 or self.feature_dim < 1:
            raise ValueError("n_val and feature_dim must be positive")
        if not 0.0 <= self.noise_low <= self.noise_high:
            raise ValueError("need 0 <= noise_low <= noise_high")


def difficulty_from_hardness(hardness: Sequence[float], levels: int = 5) -> list[int]:
    """Discretize per-sample hardness into Likert classes by equal quantiles.

    Equal hardness values always land in the same class (ties collapse to
    the lowest class of their quantile group), so an all-constant profile
    maps every sample to class 1.
    """
    hardness = np.asarray(hardness, dtype=float)
    n = hardness.size
    order = np.argsort(hardness, kind="stable")
    cls = np.empty(n, dtype=int)
    for pos, i in enumerate(order):
        cls[i] = 1 + (pos * levels) // n
    # collapse ties: every equal hardness value gets one class
    first_class: dict[float, int] = {}
    for pos in order:
        v = hardness[pos]
        if v not in first_class:
            first_class[v] = cls[pos]
        cls[pos] = first_class[v]
    return cls.tolist()


def generate_synthetic(
    spec: SyntheticSpec,
) -> tuple[Dataset, dict[str, DifficultyScores], list[Sample]]:
    """Deterministic synthetic (train, difficulty, validation) triple.

    Training labels are corrupted per sample: Gaussian label noise scaled by
    the sample's noise level for regression, label flips with probability
    min(0.5, level) for classification.  Difficulty is the Likert quantile
    class of the noise level.  Validation samples are noise-free.
    """
    rng = np.random.default_rng(spec.seed)
    d = spec.feature_dim
    w_true = rng.standard_normal(d)
    w_true /= np.linalg.norm(w_true)

    scales = rng.uniform(spec.noise_low, spec.noise_high, size=spec.n_train)
    x_train = rng.standard_normal((spec.n_train, d))
    x_val = rng.standard_normal((spec.n_val, d))

    def clean_label(x):
        s = float(w_true @ x)
        if spec.task == "regression":
            return s
        return 1.0 if s > 0 else 0.0

    train_samples = []
    for i in range(spec.n_train):
        y = clean_label(x_train[i])
        if spec.task == "regression":
            y += scales[i] * rng.standard_normal()
        else:
            if rng.uniform() < min(0.5, scales[i]):
                y = 1.0 - y
        train_samples.append(encode_sample(f"train-{i:05d}", x_train[i], y))

    val_samples = [
        encode_sample(f"val-{i:05d}", x_val[i], clean_label(x_val[i]))
        for i in range(spec.n_val)
    ]

    classes = difficulty_from_hardness(scales)
    difficulty = {
        s.id: DifficultyScores(knowledge=c, reasoning=c, overall=c)
        for s, c in zip(train_samples, classes)
    }
    return Dataset(train_samples), difficulty, val_samples


def build_score_table(
    difficulty: dict[str, DifficultyScores],
    influence: dict[str, float],
    provenance: str = "",
) -> ScoreTable:
    entries = [
        ScoredSample(sample_id=i, difficulty=difficulty[i], influence=influence[i])
        for i in influence
    ]
    return ScoreTable(entries, provenance=provenance)


def constant_schedule(lr: float, steps: int) -> np.ndarray:
    if steps < 1:
        raise ValueError("schedule must cover at least one step")
    return np.full(steps, float(lr))


def cosine_schedule(lr_max: float, steps: int, lr_min: float = 0.0) -> np.ndarray:
    if steps < 1:
        raise ValueError("schedule must cover at least one step")
    # end-exclusive so the last step rate stays strictly above lr_min
    t = np.arange(steps) / steps
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + np.cos(np.pi * t))


@dataclass
class TrainRun:
    """SGD trajectory: per-epoch checkpoints plus the loss trace."""

    checkpoints: list[Checkpoint]
    final_params: np.ndarray
    loss_trace: list[float] = field(default_factory=list)


def train_sgd(
    model: ReferenceModel,
    train: Dataset | Sequence[Sample],
    schedule: Sequence[float],
    epochs: int,
    seed: int = 0,
    init_params: np.ndarray | None = None,
) -> TrainRun:
    """Per-sample SGD with seeded per-epoch shuffling.

    ``schedule`` lists one learning rate per step (epochs * n_train entries);
    each epoch's checkpoint carries the arithmetic mean of its step rates.
    """
    train = list(train)
    if not train:
        raise ValueError("training set must be non-empty")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    schedule = np.asarray(schedule, dtype=float)
    if schedule.ndim != 1 or schedule.size != epochs * len(train):
        raise ValueError(
            f"schedule must list {epochs * len(train)} per-step rates, got {schedule.size}"
        )
    if np.any(schedule <= 0):
        raise ValueError("all learning rates must be positive")

    params = (
        np.zeros(model.param_dim)
        if init_params is None
        else np.array(init_params, dtype=float)
    )
    rng = np.random.default_rng(seed)
    n = len(train)
    checkpoints = []
    loss_trace = []
    step = 0
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        epoch_rates = []
        for idx in order:
            eta = schedule[step]
            step += 1
            epoch_rates.append(eta)
            params = params - eta * model.gradient(params, train[idx])
        epoch_loss = math.fsum(model.loss(params, z) for z in train) / n
        if not math.isfinite(epoch_loss):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        loss_trace.append(epoch_loss)
        checkpoints.append(
            Checkpoint(
                params=params.copy(),
                learning_rate=float(np.mean(epoch_rates)),
                epoch_index=epoch,
            )
        )
    return TrainRun(checkpoints=checkpoints, final_params=params, loss_trace=loss_trace)


def oracle_influence(
    model: ReferenceModel,
    checkpoint: Checkpoint,
    z: Sample,
    val: Sequence[Sample],
    eta: float,
) -> float:
    """Exact mean validation-loss change from one real SGD step on z."""
    if eta < 0:
        raise ValueError("eta must be >= 0")
    if not val:
        raise ValueError("validation set must be non-empty")
    before = checkpoint.params
    after = before - eta * model.gradient(before, z)
    deltas = []
    for zp in val:
        lo = model.loss(before, zp)
        hi = model.loss(after, zp)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise FloatingPointError(f"non-finite loss after step on {z.id!r}")
        deltas.append(hi - lo)
    return math.fsum(deltas) / len(val)


def _mean_loss(model: ReferenceModel, params, samples: Sequence[Sample]) -> float:
    return math.fsum(model.loss(params, z) for z in samples) / len(samples)


def _model_for(spec: SyntheticSpec) -> ReferenceModel:
    if spec.task == "regression":
        return LinearModel(spec.feature_dim)
    return LogisticModel(spec.feature_dim)


@dataclass
class ComparisonReport:
    """Per-cell records plus per-ratio summaries of the paired comparison."""

    records: list[dict]
    summaries: list[dict]


def compare_selection(
    spec: SyntheticSpec,
    ratios: Sequence[float],
    n_seeds: int,
    tau: float = 3.0,
    epochs: int = 3,
    lr: float = 0.05,
    probe_lr: float = 0.01,
    k_val: int = 100,
) -> ComparisonReport:
    """Paired quadrant-selection vs random-subset comparison.

    Per (ratio, seed) cell: a probe run on the full data produces the
    checkpoints used for influence scoring; both arms then retrain from the
    same initialization with the same shuffle seed on subsets of equal size,
    and are scored by mean loss on the noise-free validation set.  Subsets
    are retrained in dataset order so the ratio=1.0 arms coincide exactly.

    The probe uses a smaller rate than retraining: far-from-converged
    checkpoints carry much cleaner validation-gradient signal, and ``k_val``
    defaults high for the same reason (a small draw makes the mean
    validation gradient a noisy direction that selection then overfits).
    """
    if n_seeds < 2:
        raise ValueError("n_seeds must be >= 2")
    for r in ratios:
        if not 0.0 < r <= 1.0:
            raise ValueError(f"ratio must be in (0, 1], got {r}")

    records = []
    per_ratio: dict[float, list[tuple[float, float]]] = {r: [] for r in ratios}
    for s in range(n_seeds):
        cell_seed = spec.seed + 1000 * s
        cell_spec = SyntheticSpec(
            task=spec.task,
            n_train=spec.n_train,
            n_val=spec.n_val,
            feature_dim=spec.feature_dim,
            noise_low=spec.noise_low,
            noise_high=spec.noise_high,
            seed=cell_seed,
        )
        train, difficulty, val = generate_synthetic(cell_spec)
        model = _model_for(cell_spec)

        probe = train_sgd(
            model,
            train,
            constant_schedule(probe_lr, epochs * len(train)),
            epochs=epochs,
            seed=cell_seed,
        )
        val_subset = sample_validation([val], k=k_val, seed=cell_seed)
        influence = score_dataset_influence(model, probe.checkpoints, train, val_subset)
        table = build_score_table(difficulty, influence)

        for ratio in ratios:
            manifest = select(
                train, table, SelectionConfig(tau=tau, ratio=ratio)
            )
            diq_ids = set(manifest.selected_ids)
            n_take = len(diq_ids)
            rng = np.random.default_rng(cell_seed + 7)
            rand_idx = rng.choice(len(train), size=n_take, replace=False)
            rand_ids = {train[i].id for i in rand_idx}

            losses = {}
            for arm, ids in (("diq", diq_ids), ("random", rand_ids)):
                subset = [z for z in train if z.id in ids]  # dataset order
                run = train_sgd(
                    model,
                    subset,
                    constant_schedule(lr, epochs * len(subset)),
                    epochs=epochs,
                    seed=cell_seed + 13,
                )
                losses[arm] = _mean_loss(model, run.final_params, val)
                records.append(
                    {
                        "ratio": ratio,
                        "seed": s,
                        "arm": arm,
                        "n_selected": len(subset),
                        "val_loss": losses[arm],
                    }
                )
            per_ratio[ratio].append((losses["diq"], losses["random"]))

    summaries = []
    for ratio in ratios:
        pairs = per_ratio[ratio]
        diq = [p[0] for p in pairs]
        rnd = [p[1] for p in pairs]
        wins = sum(1 for a, b in pairs if a < b)
        ties = sum(1 for a, b in pairs if a == b)
        summaries.append(
            {
                "ratio": ratio,
                "n_seeds": n_seeds,
                "mean_diq": math.fsum(diq) / n_seeds,
                "mean_random": math.fsum(rnd) / n_seeds,
                "win_rate": wins / n_seeds,
                "ties": ties,
                "metric": "mean validation loss (held-out, noise-free)",
            }
        )
    return ComparisonReport(records=records, summaries=summaries)


def write_report(report: ComparisonReport, path) -> None:
    with Path(path).open("w", encoding="utf-8") as f:
        for rec in report.records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")
        for summ in report.summaries:
            f.write(json.dumps({"summary": summ}, sort_keys=True) + "\n")
