"""Quadrant-based subset selection.

Samples are placed in a (difficulty, influence) plane split by a difficulty
threshold tau and the dataset-wide influence median m (both comparisons use
>= on the high side):

    Q1: difficulty >= tau and influence >= m   (high difficulty, high influence)
    Q2: difficulty <  tau and influence >= m
    Q3: difficulty >= tau and influence <  m
    Q4: difficulty <  tau and influence <  m

Selection fills Q1 -> Q2 -> Q3 -> Q4, within each quadrant by descending
influence with ties broken by ascending id, stopping at
N_target = floor(|D| * ratio).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .data import Dataset, ScoreTable, SchemaError, validate_scores

__all__ = [
    "SelectionConfig",
    "SelectionManifest",
    "ManifestRow",
    "QuadrantSelector",
    "influence_median",
    "assign_quadrant",
    "select",
    "write_manifest",
    "load_manifest",
    "write_subset",
]

DIMENSIONS = ("knowledge", "reasoning", "overall")


@dataclass(frozen=True)
class SelectionConfig:
    """Threshold tau, keeping ratio, and difficulty dimension for one selection run."""

    tau: float = 3.0
    ratio: float = 1.0
    dimension: str = "overall"

    def __post_init__(self):
        if not 1.0 <= self.tau <= 5.0:
            raise ValueError(f"tau must be in [1, 5], got {self.tau}")
        if not 0.0 < self.ratio <= 1.0:
            raise ValueError(f"ratio must be in (0, 1], got {self.ratio}")
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"dimension must be one of {DIMENSIONS}")


def influence_median(values: Sequence[float]) -> float:
    """Standard median: middle element, or mean of the two middle elements."""
    if len(values) == 0:
        raise ValueError("cannot take the median of an empty list")
    return float(np.median(np.asarray(values, dtype=float)))


def assign_quadrant(difficulty: float, influence: float, tau: float, m: float) -> int:
    """Quadrant number 1-4; both splits are inclusive on the high side."""
    hi_q = difficulty >= tau
    hi_i = influence >= m
    if hi_q and hi_i:
        return 1
    if hi_i:
        return 2
    if hi_q:
        return 3
    return 4


def _run_selection(
    ids: Sequence[str],
    difficulty: Sequence[float],
    influence: Sequence[float],
    tau: float,
    ratio: float,
):
    """Core priority-fill selection over parallel arrays.

    Returns (median, n_target, quadrant per input index, within-quadrant rank
    per input index, ordered list of selected indices).
    """
    n = len(ids)
    influence = np.asarray(influence, dtype=float)
    difficulty = np.asarray(difficulty, dtype=float)
    ids_arr = np.asarray(ids, dtype=str)
    m = influence_median(influence)
    n_target = min(math.floor(n * ratio), n)
    hi_i = influence >= m
    hi_q = difficulty >= tau
    quadrant = np.where(hi_q & hi_i, 1, np.where(hi_i, 2, np.where(hi_q, 3, 4)))

    # global order by descending influence, ties by ascending id; the last
    # lexsort key is the primary one
    order = np.lexsort((ids_arr, -influence))
    rank = np.empty(n, dtype=int)
    selected_order: list[int] = []
    for q in (1, 2, 3, 4):
        qidx = order[quadrant[order] == q]
        rank[qidx] = np.arange(1, qidx.size + 1)
        take = min(qidx.size, n_target - len(selected_order))
        selected_order.extend(int(i) for i in qidx[:take])
    return m, n_target, quadrant.tolist(), rank.tolist(), selected_order


@dataclass(frozen=True)
class ManifestRow:
    id: str
    quadrant: int
    rank: int
    selected: bool


@dataclass
class SelectionManifest:
    """Deterministic record of one selection run: every sample, plus metadata."""

    rows: list[ManifestRow]
    metadata: dict = field(default_factory=dict)

    @property
    def selected_ids(self) -> list[str]:
        # rows are stored in manifest order; selection order is quadrant
        # priority then within-quadrant rank, over selected rows only.
        chosen = [r for r in self.rows if r.selected]
        chosen.sort(key=lambda r: (r.quadrant, r.rank))
        return [r.id for r in chosen]

    def quadrant_of(self, sample_id: str) -> int:
        for r in self.rows:
            if r.id == sample_id:
                return r.quadrant
        raise KeyError(sample_id)


def select(dataset: Dataset, table: ScoreTable, config: SelectionConfig) -> SelectionManifest:
    """Run the quadrant selection over a dataset with a complete score table."""
    report = validate_scores(table, dataset)
    if report.missing:
        raise SchemaError(
            f"score table missing ids: {', '.join(report.missing[:10])}"
            + ("..." if len(report.missing) > 10 else "")
        )
    ids = dataset.ids
    difficulty = [table[i].difficulty.get(config.dimension) for i in ids]
    influence = [table[i].influence for i in ids]
    m, n_target, quadrant, rank, selected_order = _run_selection(
        ids, difficulty, influence, config.tau, config.ratio
    )
    selected = set(selected_order)
    order = sorted(range(len(ids)), key=lambda i: (quadrant[i], rank[i]))
    rows = [
        ManifestRow(id=ids[i], quadrant=quadrant[i], rank=rank[i], selected=i in selected)
        for i in order
    ]
    counts = {f"q{q}": quadrant.count(q) for q in (1, 2, 3, 4)}
    metadata = {
        "tau": config.tau,
        "ratio": config.ratio,
        "dimension": config.dimension,
        "median": m,
        "median_rule": "even-count: mean of the two middle values",
        "n_target": n_target,
        "counts": counts,
        "empty_selection_warning": n_target == 0,
    }
    return SelectionManifest(rows=rows, metadata=metadata)


class QuadrantSelector(BaseEstimator):
    """Scikit-learn-style sample selector over a (difficulty, influence) matrix.

    Parameters
    ----------
    tau : float, difficulty threshold in [1, 5].
    ratio : float, keeping ratio in (0, 1].

    ``fit`` expects X of shape (n_samples, 2) with difficulty in column 0 and
    influence in column 1.  Ties between equal influence values are broken by
    row index, so results are deterministic.
    """

    def __init__(self, tau: float = 3.0, ratio: float = 1.0):
        self.tau = tau
        self.ratio = ratio

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True, dtype=float)
        if X.shape[1] != 2:
            raise ValueError(
                f"X must have exactly 2 columns (difficulty, influence), got {X.shape[1]}"
            )
        SelectionConfig(tau=self.tau, ratio=self.ratio)  # validates bounds
        n = X.shape[0]
        # row indices double as ids; zero-pad so lexicographic == numeric order
        width = len(str(n))
        ids = [str(i).zfill(width) for i in range(n)]
        m, n_target, quadrant, rank, selected_order = _run_selection(
            ids, X[:, 0], X[:, 1], self.tau, self.ratio
        )
        self.n_features_in_ = 2
        self.median_ = m
        self.n_target_ = n_target
        self.quadrant_ = np.asarray(quadrant)
        self.rank_ = np.asarray(rank)
        self.selection_order_ = np.asarray(selected_order, dtype=int)
        support = np.zeros(n, dtype=bool)
        support[self.selection_order_] = True
        self.support_ = support
        return self

    def get_support(self, indices: bool = False):
        check_is_fitted(self, "support_")
        if indices:
            return np.flatnonzero(self.support_)
        return self.support_

    def transform(self, X):
        """Return the selected rows of X, in original row order."""
        check_is_fitted(self, "support_")
        X = check_array(X, ensure_2d=True, dtype=None)
        if X.shape[0] != self.support_.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} rows but selector was fit on {self.support_.shape[0]}"
            )
        return X[self.support_]

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)


def write_manifest(manifest: SelectionManifest, path) -> None:
    """Manifest file: one metadata record, then one record per sample."""
    with Path(path).open("w", encoding="utf-8") as f:
        f.write(json.dumps({"metadata": manifest.metadata}, sort_keys=True) + "\n")
        for row in manifest.rows:
            rec = {
                "id": row.id,
                "quadrant": row.quadrant,
                "rank": row.rank,
                "selected": row.selected,
            }
            f.write(json.dumps(rec) + "\n")


def load_manifest(path) -> SelectionManifest:
    path = Path(path)
    with path.open("r", encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if not lines:
        raise SchemaError("empty manifest file")
    head = json.loads(lines[0])
    if "metadata" not in head:
        raise SchemaError("manifest must start with a metadata record")
    rows = []
    for line in lines[1:]:
        rec = json.loads(line)
        rows.append(
            ManifestRow(
                id=rec["id"],
                quadrant=int(rec["quadrant"]),
                rank=int(rec["rank"]),
                selected=bool(rec["selected"]),
            )
        )
    return SelectionManifest(rows=rows, metadata=head["metadata"])


def write_subset(dataset: Dataset, manifest: SelectionManifest, path) -> None:
    """Write selected samples in selection order, directly usable as a training file."""
    with Path(path).open("w", encoding="utf-8") as f:
        for sample_id in manifest.selected_ids:
            f.write(json.dumps(dataset.by_id(sample_id).to_record(), sort_keys=True) + "\n")
