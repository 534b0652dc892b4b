"""Chronological splitting, model evaluation by region category, ablations."""

from __future__ import annotations

import csv
import datetime
from dataclasses import dataclass, field

import numpy as np

from .gbdt import make_model
from .vectors import FEATURE_COLUMNS, FeatureVector

CATEGORIES = ("CR", "CHN", "KOR", "JPN", "Others")
GROUP_PREFIXES = {"meta": "meta_", "contextual": "ctx_", "ingame": "ingame_"}


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    train_end: datetime.date = datetime.date(2017, 12, 31)
    test_start: datetime.date = datetime.date(2018, 1, 1)
    test_end: datetime.date = datetime.date(2021, 12, 31)

    def __post_init__(self):
        if not (self.train_end < self.test_start <= self.test_end):
            raise SplitError(
                f"need train_end < test_start <= test_end, got "
                f"{self.train_end} / {self.test_start} / {self.test_end}")


def chronological_split(rows: list[FeatureVector], spec: SplitSpec = SplitSpec()
                        ) -> tuple[list[FeatureVector], list[FeatureVector]]:
    train = [r for r in rows if r.sort_key <= spec.train_end]
    test = [r for r in rows if spec.test_start <= r.sort_key <= spec.test_end]
    return train, test


@dataclass(frozen=True)
class AblationMask:
    include_meta: bool = True
    include_contextual: bool = True
    include_ingame: bool = True

    def __post_init__(self):
        if not (self.include_meta or self.include_contextual or self.include_ingame):
            raise ValueError("at least one feature group must stay enabled")

    def prefixes(self) -> tuple[str, ...]:
        out = []
        if self.include_meta:
            out.append(GROUP_PREFIXES["meta"])
        if self.include_contextual:
            out.append(GROUP_PREFIXES["contextual"])
        if self.include_ingame:
            out.append(GROUP_PREFIXES["ingame"])
        return tuple(out)

    def label(self) -> str:
        flags = [("meta", self.include_meta), ("contextual", self.include_contextual),
                 ("ingame", self.include_ingame)]
        return "+".join(name for name, on in flags if on)


PAPER_MASKS = [
    AblationMask(True, False, False),
    AblationMask(False, True, False),
    AblationMask(False, False, True),
    AblationMask(True, True, False),
    AblationMask(True, True, True),
]


@dataclass
class FeatureMatrix:
    columns: list[str]
    X: np.ndarray
    y: np.ndarray
    categories: list[str]
    game_ids: list[str]

    @classmethod
    def from_vectors(cls, rows: list[FeatureVector],
                     mask: AblationMask | None = None) -> "FeatureMatrix":
        """Numeric matrix over labeled rows; every feature column is paired
        with its presence flag, and masked-out groups are dropped entirely."""
        prefixes = mask.prefixes() if mask else tuple(GROUP_PREFIXES.values())
        value_cols = [c for c in FEATURE_COLUMNS if c.startswith(prefixes)]
        columns = []
        for col in value_cols:
            columns.append(col)
            columns.append(f"{col}_present")
        labeled = [r for r in rows if r.label is not None]
        X = np.empty((len(labeled), len(columns)))
        for i, row in enumerate(labeled):
            for j, col in enumerate(value_cols):
                v = row.values.get(col)
                X[i, 2 * j] = np.nan if v is None else v
                X[i, 2 * j + 1] = 0.0 if v is None else 1.0
        return cls(
            columns=columns,
            X=X,
            y=np.array([r.label for r in labeled], dtype=float),
            categories=[r.category for r in labeled],
            game_ids=[r.game_id for r in labeled],
        )


@dataclass(frozen=True)
class CategoryMetrics:
    acc: float | None
    mse: float | None
    n: int


@dataclass
class MetricsByCategory:
    predictor: str
    rows: dict[str, CategoryMetrics] = field(default_factory=dict)

    @property
    def mean(self) -> CategoryMetrics:
        return self.rows["Mean"]


def evaluate_probabilities(predictor: str, probs: np.ndarray, labels: np.ndarray,
                           categories: list[str]) -> MetricsByCategory:
    """Accuracy (ties at 0.5 predict a black win) and Brier score, overall and
    per region category; the Mean row aggregates the category rows."""
    if len(labels) == 0:
        raise ValueError("evaluation needs at least one row")
    probs = np.asarray(probs, dtype=float)
    labels = np.asarray(labels, dtype=float)
    predicted = (probs >= 0.5).astype(float)
    correct = predicted == labels
    sq_err = (probs - labels) ** 2
    cats = np.array(categories)

    out = MetricsByCategory(predictor)
    out.rows["Mean"] = CategoryMetrics(float(correct.mean()), float(sq_err.mean()),
                                       int(len(labels)))
    for cat in CATEGORIES:
        sel = cats == cat
        n = int(sel.sum())
        if n == 0:
            out.rows[cat] = CategoryMetrics(None, None, 0)
        else:
            out.rows[cat] = CategoryMetrics(float(correct[sel].mean()),
                                            float(sq_err[sel].mean()), n)
    return out


def evaluate_model(predictor: str, model, matrix: FeatureMatrix) -> MetricsByCategory:
    probs = model.predict_proba(matrix.X)
    return evaluate_probabilities(predictor, probs, matrix.y, matrix.categories)


def run_ablation(
    rows: list[FeatureVector],
    masks: list[AblationMask] = PAPER_MASKS,
    model_kind: str = "gbdt",
    spec: SplitSpec = SplitSpec(),
    seed: int = 0,
    hyper: dict | None = None,
) -> list[tuple[AblationMask, MetricsByCategory]]:
    """One train/evaluate cycle per mask: excluded groups' columns are dropped
    (not zeroed), with the same split and seed throughout."""
    train, test = chronological_split(rows, spec)
    results = []
    for mask in masks:
        train_matrix = FeatureMatrix.from_vectors(train, mask)
        test_matrix = FeatureMatrix.from_vectors(test, mask)
        model = make_model(model_kind, seed=seed, **(hyper or {}))
        model.fit(train_matrix.X, train_matrix.y)
        results.append((mask, evaluate_model(mask.label(), model, test_matrix)))
    return results


# ---------------------------------------------------------------------------
# CSV outputs
# ---------------------------------------------------------------------------

_METRIC_COLUMNS = ["Mean", "CR", "CHN", "KOR", "JPN", "Others"]


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def write_predictions_csv(path, game_ids, probs, labels, categories) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["game_id", "p_black", "label", "category"])
        for gid, p, y, cat in zip(game_ids, probs, labels, categories):
            writer.writerow([gid, f"{p:.6f}", int(y), cat])


def metrics_header() -> list[str]:
    header = ["predictor"]
    for cat in _METRIC_COLUMNS:
        key = cat.lower()
        header += [f"{key}_acc", f"{key}_mse", f"{key}_n"]
    return header


def metrics_row(metrics: MetricsByCategory) -> list[str]:
    row = [metrics.predictor]
    for cat in _METRIC_COLUMNS:
        m = metrics.rows[cat]
        row += [_fmt(m.acc), _fmt(m.mse), str(m.n)]
    return row


def write_metrics_csv(path, results: list[MetricsByCategory]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(metrics_header())
        for metrics in results:
            writer.writerow(metrics_row(metrics))


def write_ablation_csv(path, results: list[tuple[AblationMask, MetricsByCategory]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["meta", "contextual", "ingame", "acc", "mse", "n"])
        for mask, metrics in results:
            mean = metrics.mean
            writer.writerow([
                int(mask.include_meta), int(mask.include_contextual),
                int(mask.include_ingame), _fmt(mean.acc), _fmt(mean.mse),
                str(mean.n),
            ])
