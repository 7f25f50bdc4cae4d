import math
import statistics

import numpy as np
import pytest

from diq.data import Dataset, DifficultyScores, SchemaError, ScoreTable, ScoredSample
from diq.selector import (
    QuadrantSelector,
    SelectionConfig,
    assign_quadrant,
    influence_median,
    load_manifest,
    select,
    write_manifest,
    write_subset,
)

from conftest import SIX, make_sample


def literal_algorithm(items, tau, ratio):
    """Straight-line re-implementation of the priority-fill selection.

    items: list of (id, quality, influence).  Kept deliberately independent
    of the library: statistics.median, plain list comprehensions.
    """
    n_target = math.floor(len(items) * ratio)
    med = statistics.median([i for _, _, i in items])
    q1 = [d for d in items if d[1] >= tau and d[2] >= med]
    q2 = [d for d in items if d[1] < tau and d[2] >= med]
    q3 = [d for d in items if d[1] >= tau and d[2] < med]
    q4 = [d for d in items if d[1] < tau and d[2] < med]
    selected = []
    for quadrant in (q1, q2, q3, q4):
        if len(selected) >= n_target:
            break
        ordered = sorted(quadrant, key=lambda d: (-d[2], d[0]))
        n_take = min(len(quadrant), n_target - len(selected))
        selected.extend(ordered[:n_take])
    return [d[0] for d in selected]


def build_instance(pairs):
    """pairs: dict id -> (overall difficulty, influence)."""
    dataset = Dataset(make_sample(i) for i in pairs)
    table = ScoreTable(
        ScoredSample(i, DifficultyScores(q, q, q), inf) for i, (q, inf) in pairs.items()
    )
    return dataset, table


def random_instance(rng, max_n=200):
    n = int(rng.integers(1, max_n + 1))
    ids = [f"s{i:04d}" for i in range(n)]
    quality = rng.integers(1, 6, size=n)
    influence = rng.standard_normal(n)
    tau = float(rng.uniform(1, 5))
    ratio = float(rng.uniform(0, 1)) or 1.0
    return ids, quality, influence, tau, ratio


class TestMedian:
    def test_odd(self):
        assert influence_median([1, 2, 3]) == 2

    def test_even_mean_of_middles(self):
        assert influence_median([1, 2, 3, 4]) == 2.5

    def test_singleton(self):
        assert influence_median([5]) == 5

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            influence_median([])


class TestAssignQuadrant:
    def test_boundaries_are_inclusive_high(self):
        assert assign_quadrant(3, 0.0, tau=3, m=0.0) == 1

    def test_low_quality_high_influence(self):
        assert assign_quadrant(2, 0.5, tau=3, m=0.0) == 2

    def test_high_quality_low_influence(self):
        assert assign_quadrant(4, -0.1, tau=3, m=0.0) == 3

    def test_low_both(self):
        assert assign_quadrant(1, -1.0, tau=3, m=0.0) == 4


class TestWorkedTrace:
    def test_median_and_quadrants(self, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(tau=3, ratio=0.5))
        assert manifest.metadata["median"] == pytest.approx(0.3)
        by_q = {q: sorted(r.id for r in manifest.rows if r.quadrant == q) for q in (1, 2, 3, 4)}
        assert by_q == {1: ["a", "e"], 2: ["b"], 3: ["c"], 4: ["d", "f"]}

    def test_half_ratio_selects_a_e_b(self, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(tau=3, ratio=0.5))
        assert manifest.selected_ids == ["a", "e", "b"]
        assert manifest.metadata["n_target"] == 3

    def test_full_ratio_order(self, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(tau=3, ratio=1.0))
        assert manifest.selected_ids == ["a", "e", "b", "c", "d", "f"]

    def test_four_of_six_enters_q3(self, six_dataset, six_table):
        # n_target=4 via ratio 4/6
        manifest = select(six_dataset, six_table, SelectionConfig(tau=3, ratio=4 / 6))
        assert manifest.selected_ids == ["a", "e", "b", "c"]


class TestSelect:
    def test_missing_score_names_id(self, six_dataset, six_table):
        del six_table.entries["c"]
        with pytest.raises(SchemaError, match="missing ids: c"):
            select(six_dataset, six_table, SelectionConfig())

    def test_tiny_ratio_yields_empty_selection_with_warning(self, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(ratio=0.01))
        assert manifest.selected_ids == []
        assert manifest.metadata["empty_selection_warning"]

    def test_every_id_appears_once(self, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(ratio=0.5))
        assert sorted(r.id for r in manifest.rows) == sorted(six_dataset.ids)

    def test_dimension_is_configurable(self):
        pairs = {"a": (5, 1.0), "b": (1, 0.9)}
        dataset = Dataset(make_sample(i) for i in pairs)
        # knowledge says b is hard, overall says a is hard
        table = ScoreTable(
            [
                ScoredSample("a", DifficultyScores(1, 3, 5), 1.0),
                ScoredSample("b", DifficultyScores(5, 3, 1), 1.0),
            ]
        )
        via_overall = select(dataset, table, SelectionConfig(ratio=0.5, dimension="overall"))
        via_knowledge = select(dataset, table, SelectionConfig(ratio=0.5, dimension="knowledge"))
        assert via_overall.selected_ids == ["a"]
        assert via_knowledge.selected_ids == ["b"]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SelectionConfig(tau=0.5)
        with pytest.raises(ValueError):
            SelectionConfig(ratio=0.0)
        with pytest.raises(ValueError):
            SelectionConfig(dimension="hardness")


class TestOracleEquivalence:
    def test_matches_literal_reimplementation(self):
        rng = np.random.default_rng(2024)
        for _ in range(300):
            ids, quality, influence, tau, ratio = random_instance(rng)
            dataset, table = build_table(ids, quality, influence)
            manifest = select(dataset, table, SelectionConfig(tau=tau, ratio=ratio))
            expected = literal_algorithm(
                list(zip(ids, quality.tolist(), influence.tolist())), tau, ratio
            )
            assert manifest.selected_ids == expected


def build_table(ids, quality, influence):
    dataset = Dataset(make_sample(i) for i in ids)
    table = ScoreTable(
        ScoredSample(i, DifficultyScores(int(q), int(q), int(q)), float(f))
        for i, q, f in zip(ids, quality, influence)
    )
    return dataset, table


class TestProperties:
    def run(self, pairs, tau, ratio):
        dataset, table = build_instance(pairs)
        return select(dataset, table, SelectionConfig(tau=tau, ratio=ratio))

    def test_partition_and_cardinality(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ids, quality, influence, tau, ratio = random_instance(rng, max_n=60)
            dataset, table = build_table(ids, quality, influence)
            manifest = select(dataset, table, SelectionConfig(tau=tau, ratio=ratio))
            assert sorted(r.id for r in manifest.rows) == sorted(ids)
            n_target = math.floor(len(ids) * ratio)
            assert len(manifest.selected_ids) == min(n_target, len(ids))

    def test_priority_monotonicity(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            ids, quality, influence, tau, ratio = random_instance(rng, max_n=60)
            dataset, table = build_table(ids, quality, influence)
            manifest = select(dataset, table, SelectionConfig(tau=tau, ratio=ratio))
            selected = {r.id for r in manifest.rows if r.selected}
            quad = {r.id: r.quadrant for r in manifest.rows}
            chosen_quads = {quad[i] for i in selected}
            if chosen_quads:
                deepest = max(chosen_quads)
                for r in manifest.rows:
                    if r.quadrant < deepest:
                        assert r.id in selected

    def test_prefix_monotone_in_ratio(self):
        rng = np.random.default_rng(9)
        for _ in range(30):
            ids, quality, influence, tau, _ = random_instance(rng, max_n=60)
            dataset, table = build_table(ids, quality, influence)
            small = select(dataset, table, SelectionConfig(tau=tau, ratio=0.3)).selected_ids
            large = select(dataset, table, SelectionConfig(tau=tau, ratio=0.9)).selected_ids
            assert large[: len(small)] == small

    def test_input_order_invariance(self):
        rng = np.random.default_rng(10)
        ids, quality, influence, tau, ratio = random_instance(rng, max_n=60)
        dataset, table = build_table(ids, quality, influence)
        base = select(dataset, table, SelectionConfig(tau=tau, ratio=ratio)).selected_ids
        perm = rng.permutation(len(ids))
        dataset2, table2 = build_table(
            [ids[i] for i in perm], quality[perm], influence[perm]
        )
        permuted = select(dataset2, table2, SelectionConfig(tau=tau, ratio=ratio)).selected_ids
        assert permuted == base

    def test_affine_influence_invariance(self):
        rng = np.random.default_rng(11)
        ids, quality, influence, tau, ratio = random_instance(rng, max_n=60)
        dataset, table = build_table(ids, quality, influence)
        base = select(dataset, table, SelectionConfig(tau=tau, ratio=ratio))
        _, table2 = build_table(ids, quality, 2.5 * influence + 7.0)
        moved = select(dataset, table2, SelectionConfig(tau=tau, ratio=ratio))
        assert moved.selected_ids == base.selected_ids
        assert [r.quadrant for r in moved.rows] == [r.quadrant for r in base.rows]


class TestManifestIO:
    def test_roundtrip(self, tmp_path, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(ratio=0.5))
        path = tmp_path / "manifest.jsonl"
        write_manifest(manifest, path)
        again = load_manifest(path)
        assert again.selected_ids == manifest.selected_ids
        assert again.metadata["median"] == manifest.metadata["median"]

    def test_subset_file_in_selection_order(self, tmp_path, six_dataset, six_table):
        manifest = select(six_dataset, six_table, SelectionConfig(ratio=0.5))
        path = tmp_path / "subset.jsonl"
        write_subset(six_dataset, manifest, path)
        import json

        ids = [json.loads(line)["id"] for line in path.read_text().splitlines()]
        assert ids == ["a", "e", "b"]


class TestQuadrantSelectorEstimator:
    def X(self):
        return np.array([[SIX[i][0], SIX[i][1]] for i in sorted(SIX)], dtype=float)

    def test_fit_attributes(self):
        sel = QuadrantSelector(tau=3.0, ratio=0.5).fit(self.X())
        assert sel.median_ == pytest.approx(0.3)
        assert sel.n_target_ == 3
        # sorted ids: a b c d e f -> quadrants 1 2 3 4 1 4
        assert sel.quadrant_.tolist() == [1, 2, 3, 4, 1, 4]

    def test_support_and_transform(self):
        X = self.X()
        sel = QuadrantSelector(tau=3.0, ratio=0.5).fit(X)
        assert sel.get_support(indices=True).tolist() == [0, 1, 4]  # a, b, e
        assert sel.transform(X).shape == (3, 2)

    def test_selection_order_matches_trace(self):
        sel = QuadrantSelector(tau=3.0, ratio=0.5).fit(self.X())
        assert sel.selection_order_.tolist() == [0, 4, 1]  # a, e, b

    def test_sklearn_params_roundtrip(self):
        sel = QuadrantSelector(tau=2.0, ratio=0.25)
        assert sel.get_params() == {"tau": 2.0, "ratio": 0.25}
        sel.set_params(ratio=0.75)
        assert sel.ratio == 0.75

    def test_rejects_wrong_width(self):
        with pytest.raises(ValueError, match="2 columns"):
            QuadrantSelector().fit(np.zeros((4, 3)))

    def test_transform_before_fit_raises(self):
        from sklearn.exceptions import NotFittedError

        with pytest.raises(NotFittedError):
            QuadrantSelector().transform(np.zeros((2, 2)))
