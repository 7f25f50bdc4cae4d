import json

import pytest

from diq.data import Dataset, DifficultyScores, Sample, ScoreTable, ScoredSample

# 6-sample worked instance: (overall difficulty, influence) per id.
# tau=3 -> median 0.3 -> Q1={a,e}, Q2={b}, Q3={c}, Q4={d,f}
SIX = {
    "a": (4, 0.9),
    "b": (2, 0.8),
    "c": (5, 0.1),
    "d": (1, -0.2),
    "e": (3, 0.5),
    "f": (2, -0.5),
}


def make_sample(sample_id: str) -> Sample:
    return Sample(id=sample_id, query=f"q-{sample_id}", answer=f"a-{sample_id}")


@pytest.fixture
def six_dataset() -> Dataset:
    return Dataset(make_sample(i) for i in SIX)


@pytest.fixture
def six_table() -> ScoreTable:
    entries = [
        ScoredSample(i, DifficultyScores(q, q, q), inf) for i, (q, inf) in SIX.items()
    ]
    return ScoreTable(entries)


@pytest.fixture
def six_files(tmp_path, six_dataset):
    dataset_path = tmp_path / "dataset.jsonl"
    scores_path = tmp_path / "scores.jsonl"
    with dataset_path.open("w") as f:
        for s in six_dataset:
            f.write(json.dumps({"id": s.id, "query": s.query, "answer": s.answer}) + "\n")
    with scores_path.open("w") as f:
        for i, (q, inf) in SIX.items():
            f.write(
                json.dumps(
                    {"id": i, "knowledge": q, "reasoning": q, "overall": q, "influence": inf}
                )
                + "\n"
            )
    return dataset_path, scores_path
