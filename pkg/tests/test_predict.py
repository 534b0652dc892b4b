import datetime
import random

import numpy as np
import pytest

from progo.gbdt import GbdtModel, LogisticModel, load_model, make_model, save_model
from progo.predict import (
    PAPER_MASKS,
    AblationMask,
    FeatureMatrix,
    SplitError,
    SplitSpec,
    chronological_split,
    evaluate_probabilities,
    run_ablation,
)
from progo.sgf import PartialDate
from progo.vectors import FEATURE_COLUMNS, FeatureVector


def vector(year, label, category="CHN", **cols):
    values = {c: None for c in FEATURE_COLUMNS}
    values["meta_year"] = float(year)
    values["meta_komi"] = 6.5
    values.update(cols)
    date = PartialDate(year, 6, 1)
    return FeatureVector(
        game_id=f"g{year}-{label}-{category}-{len(cols)}",
        date=str(date), sort_key=date.sort_key(),
        category=category, label=label, values=values)


# -- split -----------------------------------------------------------------------

def test_split_default_years():
    rows = [vector(2016, 1), vector(2017, 0), vector(2018, 1)]
    train, test = chronological_split(rows)
    assert [r.sort_key.year for r in train] == [2016, 2017]
    assert [r.sort_key.year for r in test] == [2018]


def test_split_empty():
    assert chronological_split([]) == ([], [])


def test_split_partition_no_overlap():
    rows = [vector(y, y % 2) for y in range(1990, 2022)]
    train, test = chronological_split(rows)
    assert {r.game_id for r in train} & {r.game_id for r in test} == set()
    assert max(r.sort_key for r in train) < min(r.sort_key for r in test)


def test_split_rejects_overlapping_spec():
    with pytest.raises(SplitError):
        SplitSpec(datetime.date(2018, 6, 1), datetime.date(2018, 1, 1),
                  datetime.date(2021, 12, 31))


# -- evaluation -------------------------------------------------------------------

def test_perfect_probabilities():
    m = evaluate_probabilities("perfect", np.array([1.0, 0.0, 1.0]),
                               np.array([1, 0, 1]), ["CHN", "CHN", "KOR"])
    assert m.mean.acc == 1.0 and m.mean.mse == 0.0


def test_coinflip_probabilities_mse():
    m = evaluate_probabilities("coin", np.full(8, 0.5), np.array([1, 0] * 4),
                               ["CHN"] * 8)
    assert m.mean.mse == 0.25


def test_six_row_fixture_hand_computed():
    probs = np.array([0.9, 0.4, 0.6, 0.7, 0.2, 0.5])
    labels = np.array([1, 0, 0, 1, 0, 0])
    cats = ["CHN", "CHN", "CHN", "KOR", "KOR", "KOR"]
    m = evaluate_probabilities("fixture", probs, labels, cats)
    # hand computation: CHN preds (1,0,1) vs (1,0,0) -> 2/3;
    # KOR preds (1,0,1) vs (1,0,0) -> 2/3 (p=0.5 counts as a black-win call)
    assert m.rows["CHN"].acc == pytest.approx(2 / 3)
    assert m.rows["KOR"].acc == pytest.approx(2 / 3)
    assert m.mean.acc == pytest.approx(4 / 6)
    assert m.rows["CHN"].mse == pytest.approx((0.01 + 0.16 + 0.36) / 3)
    assert m.rows["KOR"].mse == pytest.approx((0.09 + 0.04 + 0.25) / 3)
    assert m.mean.mse == pytest.approx(0.91 / 6)
    assert m.rows["CHN"].n == 3 and m.rows["KOR"].n == 3
    assert m.rows["JPN"].n == 0 and m.rows["JPN"].acc is None


def test_mean_row_counts_sum():
    rng = random.Random(8)
    cats = [rng.choice(["CR", "CHN", "KOR", "JPN", "Others"]) for _ in range(200)]
    probs = np.array([rng.random() for _ in range(200)])
    labels = np.array([rng.randint(0, 1) for _ in range(200)])
    m = evaluate_probabilities("rand", probs, labels, cats)
    assert m.mean.n == sum(m.rows[c].n for c in ("CR", "CHN", "KOR", "JPN", "Others"))
    assert 0.0 <= m.mean.acc <= 1.0 and 0.0 <= m.mean.mse <= 1.0


# -- logistic ----------------------------------------------------------------------

def test_logistic_separable():
    rng = np.random.default_rng(5)
    X = np.vstack([rng.normal(-2, 0.4, (60, 2)), rng.normal(2, 0.4, (60, 2))])
    y = np.array([0] * 60 + [1] * 60, dtype=float)
    model = LogisticModel().fit(X, y)
    probs = model.predict_proba(X)
    assert (((probs >= 0.5) == y).mean()) == 1.0
    assert np.all((probs > 0) & (probs < 1))


def test_logistic_single_class_constant():
    with pytest.warns(UserWarning):
        model = LogisticModel().fit(np.zeros((10, 2)), np.ones(10))
    assert np.allclose(model.predict_proba(np.zeros((4, 2))), 1.0, atol=1e-6)


def test_logistic_antisymmetric_augmentation():
    rng = np.random.default_rng(6)
    n = 80
    black = rng.normal(0, 1, (n, 3))
    white = rng.normal(0, 1, (n, 3))
    diff = black - white
    X = np.hstack([black, white, diff])
    y = (diff[:, 0] + 0.5 * diff[:, 1] + rng.normal(0, 0.2, n) > 0).astype(float)

    def swap(M):
        return np.hstack([M[:, 3:6], M[:, 0:3], -M[:, 6:9]])

    X_aug = np.vstack([X, swap(X)])
    y_aug = np.concatenate([y, 1 - y])
    model = LogisticModel(epochs=400).fit(X_aug, y_aug)
    p = model.predict_proba(X)
    p_swapped = model.predict_proba(swap(X))
    assert np.max(np.abs(p_swapped - (1 - p))) < 1e-6


# -- gbdt ---------------------------------------------------------------------------

def test_gbdt_xor_pattern():
    rng = np.random.default_rng(7)
    n = 400
    signs = rng.choice([-1.0, 1.0], (n, 2))
    X = signs + rng.normal(0, 0.3, (n, 2))
    y = (signs[:, 0] * signs[:, 1] > 0).astype(float)
    train, test = slice(0, 300), slice(300, n)
    model = GbdtModel(n_trees=60, depth=2, shrinkage=0.3, min_leaf=5).fit(
        X[train], y[train])
    acc = (((model.predict_proba(X[test]) >= 0.5) == y[test]).mean())
    assert acc >= 0.95


def test_gbdt_constant_features_predict_base_rate():
    X = np.zeros((50, 3))
    y = np.array([1.0] * 35 + [0.0] * 15)
    model = GbdtModel(n_trees=20, depth=3, min_leaf=5).fit(X, y)
    assert np.allclose(model.predict_proba(X), 0.7, atol=1e-6)


def test_gbdt_zero_trees_is_base_rate():
    X = np.random.default_rng(0).normal(size=(30, 2))
    y = np.array([1.0] * 10 + [0.0] * 20)
    model = GbdtModel(n_trees=0).fit(X, y)
    assert np.allclose(model.predict_proba(X), 1 / 3, atol=1e-9)


def test_gbdt_single_stump_on_monotone_feature():
    X = np.arange(40, dtype=float).reshape(-1, 1)
    y = (X[:, 0] >= 20).astype(float)
    model = GbdtModel(n_trees=1, depth=1, shrinkage=0.1, min_leaf=5).fit(X, y)
    acc = (((model.predict_proba(X) >= 0.5) == y).mean())
    assert acc == 1.0


def test_gbdt_missing_values_routed_usefully():
    # informative missingness: NaN rows are mostly positive
    rng = np.random.default_rng(9)
    n = 300
    X = rng.normal(0, 1, (n, 1))
    y = (X[:, 0] > 0).astype(float)
    missing = rng.random(n) < 0.3
    y[missing] = 1.0
    X[missing, 0] = np.nan
    model = GbdtModel(n_trees=30, depth=2, shrinkage=0.3, min_leaf=10).fit(X, y)
    acc = (((model.predict_proba(X) >= 0.5) == y).mean())
    assert acc >= 0.95


def test_gbdt_deterministic():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(120, 6))
    y = (X[:, 0] + X[:, 1] > 0).astype(float)
    a = GbdtModel(n_trees=25, depth=3, min_leaf=5).fit(X, y)
    b = GbdtModel(n_trees=25, depth=3, min_leaf=5).fit(X, y)
    assert a.to_dict() == b.to_dict()


def test_model_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(11)
    X = rng.normal(size=(80, 4))
    y = (X[:, 0] > 0).astype(float)
    for kind in ("gbdt", "logistic"):
        model = make_model(kind).fit(X, y)
        path = tmp_path / f"{kind}.json"
        save_model(path, model)
        loaded = load_model(path)
        assert np.allclose(loaded.predict_proba(X), model.predict_proba(X))


# -- ablation harness ----------------------------------------------------------------

def synthetic_rows(n=260, seed=12, meta_only_signal=True):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        year = 2010 + (i * 12) // n
        ws_b, ws_w = rng.uniform(-2, 2), rng.uniform(-2, 2)
        noise = rng.uniform(-0.3, 0.3)
        label = 1 if ws_b - ws_w + noise > 0 else 0
        ctx = rng.uniform(0, 1)
        row = vector(year, label,
                     category=rng.choice(["CR", "CHN", "KOR", "JPN", "Others"]),
                     meta_black_ws=ws_b, meta_white_ws=ws_w,
                     meta_ws_diff=ws_b - ws_w,
                     ctx_black_mr20=ctx, ctx_white_mr20=1 - ctx,
                     ctx_mr20_diff=2 * ctx - 1)
        row.game_id = f"s{i}"
        rows.append(row)
    return rows


def test_ablation_five_masks_run():
    rows = synthetic_rows()
    results = run_ablation(rows, PAPER_MASKS, "gbdt",
                           SplitSpec(datetime.date(2017, 12, 31),
                                     datetime.date(2018, 1, 1),
                                     datetime.date(2021, 12, 31)),
                           hyper={"n_trees": 40, "min_leaf": 10})
    assert len(results) == 5
    labels = [mask.label() for mask, _ in results]
    assert labels == ["meta", "contextual", "ingame", "meta+contextual",
                      "meta+contextual+ingame"]
    for _, metrics in results:
        assert metrics.mean.n > 0


def test_ablation_all_groups_equals_plain_run():
    rows = synthetic_rows()
    spec = SplitSpec(datetime.date(2017, 12, 31), datetime.date(2018, 1, 1),
                     datetime.date(2021, 12, 31))
    hyper = {"n_trees": 40, "min_leaf": 10}
    [(_, via_ablation)] = run_ablation(rows, [AblationMask(True, True, True)],
                                       "gbdt", spec, hyper=hyper)
    train, test = chronological_split(rows, spec)
    model = make_model("gbdt", **hyper).fit(
        FeatureMatrix.from_vectors(train).X,
        FeatureMatrix.from_vectors(train).y)
    from progo.predict import evaluate_model
    plain = evaluate_model("plain", model, FeatureMatrix.from_vectors(test))
    assert via_ablation.rows == plain.rows


def test_ablation_meta_only_close_when_signal_is_meta():
    rows = synthetic_rows()
    spec = SplitSpec(datetime.date(2017, 12, 31), datetime.date(2018, 1, 1),
                     datetime.date(2021, 12, 31))
    hyper = {"n_trees": 40, "min_leaf": 10}
    results = dict(
        (mask.label(), metrics.mean.acc)
        for mask, metrics in run_ablation(
            rows, [AblationMask(True, False, False), AblationMask(True, True, True)],
            "gbdt", spec, hyper=hyper))
    assert results["meta"] >= results["meta+contextual+ingame"] - 0.02


def test_mask_requires_one_group():
    with pytest.raises(ValueError):
        AblationMask(False, False, False)


def test_matrix_mask_drops_columns():
    rows = synthetic_rows(40)
    matrix = FeatureMatrix.from_vectors(rows, AblationMask(True, False, False))
    assert all(c.startswith("meta_") for c in matrix.columns)
    full = FeatureMatrix.from_vectors(rows)
    assert len(full.columns) == 2 * len(FEATURE_COLUMNS)
    assert len(full.columns) > len(matrix.columns)
