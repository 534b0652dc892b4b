"""Pipeline orchestration over an on-disk workspace.

Subcommands: synth, ingest, analyze, features, rate, train, evaluate,
report.  Each stage writes only its own directory plus the manifest, skips
itself when inputs and outputs are unchanged (content hashes), and resumes
partial engine analysis.  Flag precedence: command line > workspace config
file > built-in defaults.  Exit codes: 0 ok, 2 usage, 3 missing stage
dependency, 4 data error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import datetime
import json
import logging
import os
import sys
import threading
from pathlib import Path

from . import __version__
from .catalog import (
    CatalogedGame,
    CleaningRules,
    ConfigurationError,
    load_blocklist,
    load_players_csv,
    load_tournaments_csv,
    ingest as catalog_ingest,
    write_games_csv,
)
from .engine import (
    AnalysisPolicy,
    AnalyzedGame,
    EngineCrashed,
    MoveEval,
    evaluate_game,
    make_engine,
    read_analysis,
    write_analysis,
)
from .gbdt import load_model, make_model, save_model
from .predict import (
    PAPER_MASKS,
    FeatureMatrix,
    MetricsByCategory,
    SplitSpec,
    chronological_split,
    evaluate_probabilities,
    evaluate_model,
    run_ablation,
    write_ablation_csv,
    write_metrics_csv,
    write_predictions_csv,
)
from .rating import fit_elo, fit_trueskill, fit_whr, TrueSkillParams, WhrParams
from .rating.history import (
    GameOutcome,
    read_ratings_csv,
    write_ratings_csv,
    write_ratings_meta,
)
from .report import (
    age_distribution,
    black_winrate_by_komi,
    coincidence_by_year,
    counts_by,
    length_distribution,
    loss_by_rating_bucket,
    region_totals,
    write_report_manifest,
)
from .sgf import Color, GameRecord, ResultKind, SgfError, parse_sgf, read_sgf_file
from .synth import SyntheticSpec, generate_synthetic
from .vectors import FeatureConfig, build_feature_vectors, read_features_csv, write_features_csv
from .workspace import (
    DataError,
    EXIT_DATA_ERROR,
    EXIT_MISSING_DEPENDENCY,
    EXIT_OK,
    MissingDependencyError,
    Workspace,
)

log = logging.getLogger("progo")

ENGINE_ENV_VAR = "PROGO_ENGINE"


def _date(text: str) -> datetime.date:
    return datetime.date.fromisoformat(text)


class _Config:
    """Flag > config-file > default resolution."""

    def __init__(self, args: argparse.Namespace, file_config: dict[str, str]):
        self.args = args
        self.file = file_config

    def get(self, key: str, default, cast=str):
        flag = getattr(self.args, key.replace(".", "_"), None)
        if flag is not None:
            return flag
        if key in self.file:
            raw = self.file[key]
            if cast is bool:
                return raw.lower() in ("1", "true", "yes")
            return cast(raw)
        return default

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            train_end=self.get("train_end", SplitSpec().train_end, _date),
            test_start=self.get("test_start", SplitSpec().test_start, _date),
            test_end=self.get("test_end", SplitSpec().test_end, _date),
        )


# ---------------------------------------------------------------------------
# Corpus loading shared by the stages
# ---------------------------------------------------------------------------


def load_corpus_records(ws: Workspace) -> dict[str, GameRecord]:
    corpus_dir = ws.require(ws.dir("corpus"))
    records: dict[str, GameRecord] = {}
    skipped = 0
    for path in sorted(corpus_dir.glob("*.sgf")):
        text, warning = read_sgf_file(path)
        if warning:
            log.warning(warning)
        try:
            record = parse_sgf(text)
        except SgfError as exc:
            log.warning("%s: %s (skipped)", path.name, exc)
            skipped += 1
            continue
        records.setdefault(record.game_id, record)
    if skipped:
        log.warning("skipped %d unparseable SGF files", skipped)
    return records


def corpus_paths(ws: Workspace) -> list[Path]:
    return sorted(ws.dir("corpus").glob("*.sgf"))


def load_rules(ws: Workspace) -> CleaningRules:
    path = ws.require(ws.dir("catalog") / "rules.json")
    return CleaningRules.from_dict(json.loads(path.read_text(encoding="utf-8")))


def load_cataloged(ws: Workspace) -> list[CatalogedGame]:
    """Rebuild the cataloged corpus deterministically from the pinned rules."""
    ws.require(ws.dir("catalog") / "games.csv")
    rules = load_rules(ws)
    players = load_players_csv(ws.require(ws.dir("catalog") / "players.csv"))
    tournaments = load_tournaments_csv(ws.require(ws.dir("catalog") / "tournaments.csv"))
    records = load_corpus_records(ws)
    ordered = [records[k] for k in sorted(records)]
    return catalog_ingest(ordered, players, tournaments, rules)


def load_analyses(ws: Workspace, games: list[CatalogedGame]) -> dict[str, AnalyzedGame]:
    analysis_dir = ws.dir("analysis")
    if not analysis_dir.exists():
        return {}
    analyses = {}
    for g in games:
        if not g.kept:
            continue
        path = analysis_dir / f"{g.game.game_id}.jsonl"
        if path.exists():
            analyzed, _ = read_analysis(path)
            analyses[g.game.game_id] = analyzed
    return analyses


def load_whr_history(ws: Workspace):
    path = ws.dir("ratings") / "ratings.csv"
    if not path.exists():
        return None, {}
    histories = read_ratings_csv(path)
    return histories.get("whr"), histories


def outcomes_for_rating(games: list[CatalogedGame], train_end: datetime.date
                        ) -> list[GameOutcome]:
    outcomes = []
    for g in games:
        key = g.game.sort_key()
        if not g.kept or key is None or key > train_end:
            continue
        kind = g.game.result.kind
        if kind is ResultKind.DRAW:
            score = 0.5
        else:
            winner = g.game.result.winner_or_none()
            if winner is None:
                continue
            score = 1.0 if winner is Color.BLACK else 0.0
        outcomes.append(GameOutcome(g.black.player_id, g.white.player_id, key, score))
    outcomes.sort(key=lambda o: (o.date, o.black_id, o.white_id))
    return outcomes


# ---------------------------------------------------------------------------
# Stages
# ---------------------------------------------------------------------------


def cmd_synth(ws: Workspace, args, config: _Config) -> int:
    overrides = {
        "n_players": args.players, "n_games": args.games, "seed": args.seed,
        "date_start": args.date_start, "date_end": args.date_end,
        "strength_spacing": args.spacing, "komi_advantage": args.komi_advantage,
        "cr_target": args.cr_target, "mistake_rate": args.mistake_rate,
    }
    spec = SyntheticSpec(**{k: v for k, v in overrides.items() if v is not None})
    summary = generate_synthetic(spec, ws.root)
    ws.record_stage("synth", ws.signature([], extra=repr(spec)),
                    list(corpus_paths(ws))
                    + [ws.dir("catalog") / "players.csv",
                       ws.dir("catalog") / "tournaments.csv",
                       ws.dir("catalog") / "blocklist.txt",
                       ws.dir("synth") / "engine_script.jsonl",
                       ws.dir("synth") / "truth.json"],
                    info=summary)
    log.info("synthetic corpus: %d players, %d games", summary["players"],
             summary["games"])
    return EXIT_OK


def cmd_ingest(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("corpus", "catalog")
    if args.corpus:
        src = Path(args.corpus)
        if src.resolve() != ws.dir("corpus").resolve():
            ws.require(src)
            for path in sorted(src.glob("*.sgf")):
                (ws.dir("corpus") / path.name).write_bytes(path.read_bytes())
    players_path = ws.require(Path(args.players_table) if args.players_table
                              else ws.dir("catalog") / "players.csv")
    tournaments_path = ws.require(Path(args.tournaments_table) if args.tournaments_table
                                  else ws.dir("catalog") / "tournaments.csv")
    blocklist_path = Path(args.blocklist) if args.blocklist \
        else ws.dir("catalog") / "blocklist.txt"

    rules = CleaningRules(
        exclude_handicap=not args.keep_handicap,
        blocked_events=load_blocklist(blocklist_path),
        exclude_nonstandard_board=not args.keep_nonstandard,
        exclude_dateless=not args.keep_dateless,
    )

    inputs = corpus_paths(ws) + [players_path, tournaments_path]
    if blocklist_path.exists():
        inputs.append(blocklist_path)
    sig = ws.signature(inputs, extra=json.dumps(rules.as_dict(), sort_keys=True))
    if ws.stage_fresh("ingest", sig):
        log.info("ingest: up to date")
        return EXIT_OK

    players = load_players_csv(players_path)
    tournaments = load_tournaments_csv(tournaments_path)
    records = load_corpus_records(ws)
    ordered = [records[k] for k in sorted(records)]
    cataloged = catalog_ingest(ordered, players, tournaments, rules)

    rules_path = ws.dir("catalog") / "rules.json"
    rules_path.write_text(json.dumps(rules.as_dict(), indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")
    games_path = ws.dir("catalog") / "games.csv"
    write_games_csv(games_path, cataloged)

    kept = sum(1 for g in cataloged if g.kept)
    log.info("ingest: %d games cataloged, %d kept, %d excluded",
             len(cataloged), kept, len(cataloged) - kept)
    ws.record_stage("ingest", sig, [games_path, rules_path],
                    info={"games": len(cataloged), "kept": kept})
    return EXIT_OK


def _resolve_engine_spec(ws: Workspace, args, config: _Config) -> str:
    spec = args.engine or config.file.get("engine") or os.environ.get(ENGINE_ENV_VAR)
    if not spec:
        raise DataError("no engine configured (use --engine, the config file, "
                        f"or ${ENGINE_ENV_VAR})")
    if spec.startswith("mock:script="):
        script = spec[len("mock:script="):]
        if not os.path.isabs(script):
            spec = f"mock:script={ws.root / script}"
        ws.require(Path(spec[len("mock:script="):]))
    return spec


def cmd_analyze(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("analysis")
    games_csv = ws.require(ws.dir("catalog") / "games.csv")
    engine_spec = _resolve_engine_spec(ws, args, config)
    workers = config.get("workers", 1, int)
    timeout = config.get("timeout", 60.0, float)
    policy = AnalysisPolicy(
        initial_visits=config.get("initial_visits", 100, int),
        escalated_visits=config.get("escalated_visits", 1000, int),
        winrate_jump=config.get("winrate_jump", 0.10, float),
        score_jump=config.get("score_jump", 5.0, float),
    )

    cataloged = load_cataloged(ws)
    kept = sorted((g.game for g in cataloged if g.kept), key=lambda r: r.game_id)

    inputs = corpus_paths(ws) + [games_csv]
    script = engine_spec[len("mock:script="):] if engine_spec.startswith("mock:script=") else None
    if script:
        inputs.append(Path(script))
    sig = ws.signature(inputs, extra=f"{engine_spec}|{policy.as_dict()}")
    if ws.stage_fresh("analyze", sig):
        log.info("analyze: up to date")
        return EXIT_OK

    local = threading.local()

    def engine_for_worker():
        if not hasattr(local, "engine"):
            local.engine = make_engine(engine_spec, timeout=timeout)
        return local.engine

    escalations = 0
    lock = threading.Lock()

    def analyze_one(record: GameRecord) -> Path | None:
        nonlocal escalations
        path = ws.dir("analysis") / f"{record.game_id}.jsonl"
        partial_path = Path(str(path) + ".partial")
        expected = len(record.moves) + 1
        if path.exists():
            analyzed, _ = read_analysis(path)
            if len(analyzed.evals) == expected:
                return path
        resume: list[MoveEval] = []
        if partial_path.exists():
            partial, _ = read_analysis(partial_path)
            resume = [e for e in partial.evals
                      if e.visits_used == policy.initial_visits]
            log.info("%s: resuming after ordinal %d", record.game_id,
                     max((e.ordinal for e in resume), default=-1))
        engine = engine_for_worker()
        try:
            analyzed = evaluate_game(record, engine, policy, resume_from=resume)
        except EngineCrashed as exc:
            partial = AnalyzedGame(record.game_id, record.komi, "unknown",
                                   exc.completed)
            write_analysis(partial_path, partial, policy)
            raise
        write_analysis(path, analyzed, policy)
        if partial_path.exists():
            partial_path.unlink()
        n_escalated = sum(1 for e in analyzed.evals
                          if e.visits_used == policy.escalated_visits)
        if n_escalated:
            with lock:
                escalations += n_escalated
            log.info("%s: %d positions escalated to %d visits",
                     record.game_id, n_escalated, policy.escalated_visits)
        return path

    outputs: list[Path] = []
    if workers <= 1:
        for record in kept:
            outputs.append(analyze_one(record))
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(analyze_one, kept))

    log.info("analyze: %d games, %d escalations total", len(kept), escalations)
    ws.record_stage("analyze", sig, [p for p in outputs if p],
                    info={"games": len(kept), "escalations": escalations,
                          "engine": engine_spec})
    return EXIT_OK


def cmd_rate(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("ratings")
    games_csv = ws.require(ws.dir("catalog") / "games.csv")
    system = config.get("system", "all")
    spec = config.split_spec()
    elo_k = config.get("elo_k", 20.0, float)
    drift = config.get("whr_drift", WhrParams.prior_variance_per_year, float)

    sig = ws.signature(corpus_paths(ws) + [games_csv],
                       extra=f"{system}|{spec.train_end}|{elo_k}|{drift}")
    if ws.stage_fresh("rate", sig):
        log.info("rate: up to date")
        return EXIT_OK

    cataloged = load_cataloged(ws)
    outcomes = outcomes_for_rating(cataloged, spec.train_end)
    if not outcomes:
        raise DataError("no rateable games on or before the training cutoff")

    histories = []
    if system in ("all", "elo"):
        histories.append(fit_elo(outcomes, k=elo_k))
    if system in ("all", "trueskill"):
        histories.append(fit_trueskill(outcomes, TrueSkillParams()))
    if system in ("all", "whr"):
        fit = fit_whr(outcomes, WhrParams(prior_variance_per_year=drift))
        if not fit.converged:
            log.warning("whr did not converge: max residual %.3g after %d sweeps",
                        fit.max_residual, fit.iterations)
        histories.append(fit.history)

    ratings_path = ws.dir("ratings") / "ratings.csv"
    meta_path = ws.dir("ratings") / "params.json"
    write_ratings_csv(ratings_path, histories)
    write_ratings_meta(meta_path, histories)
    log.info("rate: %s over %d games (train cutoff %s)",
             ", ".join(h.system for h in histories), len(outcomes), spec.train_end)
    ws.record_stage("rate", sig, [ratings_path, meta_path],
                    info={"systems": [h.system for h in histories],
                          "games": len(outcomes)})
    return EXIT_OK


def cmd_features(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("features")
    games_csv = ws.require(ws.dir("catalog") / "games.csv")
    spec = config.split_spec()
    cfg = FeatureConfig(
        recent_window=config.get("recent_window", 10, int),
        recommend_k=config.get("recommend_k", 1, int),
        opening_len=config.get("opening_len", 50, int),
        knowledge_cutoff=spec.train_end,
    )

    inputs = corpus_paths(ws) + [games_csv]
    analysis_dir = ws.dir("analysis")
    if analysis_dir.exists():
        inputs += sorted(analysis_dir.glob("*.jsonl"))
    ratings_path = ws.dir("ratings") / "ratings.csv"
    if ratings_path.exists():
        inputs.append(ratings_path)
    sig = ws.signature(inputs, extra=repr((cfg.recent_window, cfg.recommend_k,
                                           cfg.opening_len, cfg.knowledge_cutoff)))
    if ws.stage_fresh("features", sig):
        log.info("features: up to date")
        return EXIT_OK

    cataloged = load_cataloged(ws)
    analyses = load_analyses(ws, cataloged)
    whr_history, _ = load_whr_history(ws)
    if whr_history is None:
        log.warning("features: no ratings available; ws/wu columns will be missing")
    if not analyses:
        log.warning("features: no analysis available; in-game columns will be missing")

    workers = config.get("workers", 1, int)
    vectors = build_feature_vectors([g for g in cataloged if g.kept],
                                    analyses, whr_history, cfg, workers=workers)
    out = ws.dir("features") / "features.csv"
    write_features_csv(out, vectors)
    log.info("features: %d rows", len(vectors))
    ws.record_stage("features", sig, [out], info={"rows": len(vectors)})
    return EXIT_OK


def _model_hyper(args, config: _Config, kind: str) -> dict:
    if kind == "gbdt":
        return {
            "n_trees": config.get("n_trees", 200, int),
            "depth": config.get("depth", 3, int),
            "shrinkage": config.get("shrinkage", 0.1, float),
            "min_leaf": config.get("min_leaf", 20, int),
        }
    return {
        "lr": config.get("lr", 0.1, float),
        "l2": config.get("l2", 1e-4, float),
        "epochs": config.get("epochs", 500, int),
    }


def cmd_train(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("models")
    features_csv = ws.require(ws.dir("features") / "features.csv")
    kind = config.get("model", "gbdt")
    seed = config.get("seed", 0, int)
    spec = config.split_spec()
    hyper = _model_hyper(args, config, kind)

    sig = ws.signature([features_csv],
                       extra=f"{kind}|{seed}|{sorted(hyper.items())}|{spec}")
    if ws.stage_fresh("train", sig):
        log.info("train: up to date")
        return EXIT_OK

    rows = read_features_csv(features_csv)
    train, _ = chronological_split(rows, spec)
    matrix = FeatureMatrix.from_vectors(train)
    if len(matrix.y) == 0:
        raise DataError("no labeled training rows before the cutoff")
    model = make_model(kind, seed=seed, **hyper).fit(matrix.X, matrix.y)

    model_path = ws.dir("models") / "model.json"
    meta_path = ws.dir("models") / "train_meta.json"
    save_model(model_path, model)
    meta = {"kind": kind, "seed": seed, "hyper": hyper,
            "train_rows": int(len(matrix.y)),
            "split": {"train_end": spec.train_end.isoformat(),
                      "test_start": spec.test_start.isoformat(),
                      "test_end": spec.test_end.isoformat()}}
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n",
                         encoding="utf-8")
    log.info("train: %s on %d rows", kind, len(matrix.y))
    ws.record_stage("train", sig, [model_path, meta_path], info=meta)
    return EXIT_OK


def cmd_evaluate(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("models")
    features_csv = ws.require(ws.dir("features") / "features.csv")
    spec = config.split_spec()
    seed = config.get("seed", 0, int)
    kind = config.get("model", "gbdt")
    hyper = _model_hyper(args, config, kind)

    rows = read_features_csv(features_csv)
    _, test = chronological_split(rows, spec)
    test_matrix = FeatureMatrix.from_vectors(test)
    if len(test_matrix.y) == 0:
        raise DataError("no labeled test rows in the evaluation window")

    results: list[MetricsByCategory] = []
    outputs: list[Path] = []

    model_path = ws.dir("models") / "model.json"
    if model_path.exists():
        meta_path = ws.dir("models") / "train_meta.json"
        trained_kind = kind
        if meta_path.exists():
            trained_kind = json.loads(meta_path.read_text())["kind"]
        model = load_model(model_path)
        probs = model.predict_proba(test_matrix.X)
        results.append(evaluate_probabilities(trained_kind, probs, test_matrix.y,
                                              test_matrix.categories))
        predictions_path = ws.dir("models") / "predictions.csv"
        write_predictions_csv(predictions_path, test_matrix.game_ids, probs,
                              test_matrix.y, test_matrix.categories)
        outputs.append(predictions_path)
    else:
        log.warning("evaluate: no trained model found; rating baselines only")

    _, histories = load_whr_history(ws)
    if histories:
        labeled = {r.game_id: r for r in test if r.label is not None}
        pairs = _player_pairs(ws, labeled.keys())
        for system in sorted(histories):
            history = histories[system]
            probs = [history.predict(pairs[gid][0], pairs[gid][1], labeled[gid].sort_key)
                     for gid in test_matrix.game_ids]
            results.append(evaluate_probabilities(
                f"rating:{system}", probs, test_matrix.y, test_matrix.categories))

    if not results:
        raise DataError("nothing to evaluate: train a model or fit ratings first")

    metrics_path = ws.dir("models") / "metrics.csv"
    write_metrics_csv(metrics_path, results)
    outputs.append(metrics_path)
    for metrics in results:
        mean = metrics.mean
        log.info("evaluate: %-16s acc %.4f mse %.4f (n=%d)", metrics.predictor,
                 mean.acc, mean.mse, mean.n)

    if args.ablation:
        ablation = run_ablation(rows, PAPER_MASKS, kind, spec, seed=seed, hyper=hyper)
        ablation_path = ws.dir("models") / "ablation.csv"
        write_ablation_csv(ablation_path, ablation)
        outputs.append(ablation_path)
        for mask, metrics in ablation:
            log.info("ablation: %-24s acc %.4f mse %.4f", mask.label(),
                     metrics.mean.acc, metrics.mean.mse)

    sig = ws.signature([features_csv] + ([model_path] if model_path.exists() else []),
                       extra=f"{spec}|{args.ablation}|{kind}|{seed}")
    ws.record_stage("evaluate", sig, outputs,
                    info={"predictors": [m.predictor for m in results]})
    return EXIT_OK


def _player_pairs(ws: Workspace, game_ids) -> dict[str, tuple[str, str]]:
    import csv as _csv

    pairs = {}
    with open(ws.dir("catalog") / "games.csv", newline="", encoding="utf-8") as f:
        for row in _csv.DictReader(f):
            pairs[row["game_id"]] = (row["black_id"], row["white_id"])
    missing = set(game_ids) - set(pairs)
    if missing:
        raise DataError(f"games.csv lacks {len(missing)} evaluated game ids")
    return pairs


def cmd_report(ws: Workspace, args, config: _Config) -> int:
    ws.ensure("reports")
    games_csv = ws.require(ws.dir("catalog") / "games.csv")
    buckets = config.get("buckets", 3, int)

    inputs = corpus_paths(ws) + [games_csv]
    analysis_dir = ws.dir("analysis")
    if analysis_dir.exists():
        inputs += sorted(analysis_dir.glob("*.jsonl"))
    ratings_path = ws.dir("ratings") / "ratings.csv"
    if ratings_path.exists():
        inputs.append(ratings_path)
    sig = ws.signature(inputs, extra=f"buckets={buckets}")
    if ws.stage_fresh("report", sig):
        log.info("report: up to date")
        return EXIT_OK

    cataloged = load_cataloged(ws)
    kept = [g for g in cataloged if g.kept]
    analyses = load_analyses(ws, cataloged)
    whr_history, _ = load_whr_history(ws)

    tables = [
        region_totals(kept),
        black_winrate_by_komi(kept, analyses or None),
        counts_by(kept, "year"),
        counts_by(kept, "player", top_n=20),
        counts_by(kept, "matchup", top_n=20),
        counts_by(kept, "tournament_category", top_n=20),
        counts_by(kept, "tournament_kind"),
        counts_by(kept, "round", top_n=20),
        counts_by(kept, "gender"),
        counts_by(kept, "region_pair"),
        age_distribution(kept),
        length_distribution(kept, by_result_kind=True),
    ]
    if analyses:
        for phase in ("all", "opening", "nonopening"):
            tables.append(coincidence_by_year(kept, analyses, phase))
        if whr_history is not None:
            for stat in ("mlwr", "mls"):
                tables.append(loss_by_rating_bucket(kept, analyses, whr_history,
                                                    n_buckets=buckets, stat=stat))

    outputs = []
    for table in tables:
        path = ws.dir("reports") / f"{table.title}.csv"
        table.to_csv(path)
        outputs.append(path)

    import hashlib
    corpus_fp = hashlib.sha256(
        ";".join(sorted(g.game.game_id for g in kept)).encode()).hexdigest()[:16]
    manifest_path = ws.dir("reports") / "manifest.json"
    write_report_manifest(manifest_path, tables, corpus_fp,
                          filters={"kept_only": True, "buckets": buckets})
    outputs.append(manifest_path)

    log.info("report: %d tables over %d kept games", len(tables), len(kept))
    ws.record_stage("report", sig, outputs, info={"tables": len(tables)})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="progo",
        description="Professional Go analytics pipeline over a workspace directory.")
    parser.add_argument("--version", action="version", version=f"progo {__version__}")
    parser.add_argument("-w", "--workspace", default=".",
                        help="workspace root directory (default: current directory)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--players", type=int)
    p.add_argument("--games", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--date-start", type=_date, dest="date_start")
    p.add_argument("--date-end", type=_date, dest="date_end")
    p.add_argument("--spacing", type=float, help="strength gap between players")
    p.add_argument("--komi-advantage", type=float, dest="komi_advantage")
    p.add_argument("--cr-target", type=float, dest="cr_target")
    p.add_argument("--mistake-rate", type=float, dest="mistake_rate")

    p = sub.add_parser("ingest", help="catalog and clean the SGF corpus")
    p.add_argument("corpus", nargs="?", help="directory of .sgf files to copy in")
    p.add_argument("--players-table", dest="players_table")
    p.add_argument("--tournaments-table", dest="tournaments_table")
    p.add_argument("--blocklist")
    p.add_argument("--keep-handicap", action="store_true")
    p.add_argument("--keep-dateless", action="store_true")
    p.add_argument("--keep-nonstandard", action="store_true")

    p = sub.add_parser("analyze", help="run the engine over every kept game")
    p.add_argument("--engine", help="mock:seed=N | mock:script=PATH | cmd:<command>")
    p.add_argument("--workers", type=int)
    p.add_argument("--timeout", type=float)
    p.add_argument("--initial-visits", type=int, dest="initial_visits")
    p.add_argument("--escalated-visits", type=int, dest="escalated_visits")
    p.add_argument("--winrate-jump", type=float, dest="winrate_jump")
    p.add_argument("--score-jump", type=float, dest="score_jump")

    p = sub.add_parser("rate", help="fit rating systems on the training window")
    p.add_argument("--system", choices=["all", "elo", "trueskill", "whr"])
    p.add_argument("--train-end", type=_date, dest="train_end")
    p.add_argument("--elo-k", type=float, dest="elo_k")
    p.add_argument("--whr-drift", type=float, dest="whr_drift")

    p = sub.add_parser("features", help="assemble per-game feature vectors")
    p.add_argument("--recent-window", type=int, dest="recent_window")
    p.add_argument("--recommend-k", type=int, dest="recommend_k")
    p.add_argument("--opening-len", type=int, dest="opening_len")
    p.add_argument("--train-end", type=_date, dest="train_end")

    for name, extra in (("train", False), ("evaluate", True)):
        p = sub.add_parser(name, help="fit the outcome model" if name == "train"
                           else "evaluate model and rating baselines")
        p.add_argument("--model", choices=["gbdt", "logistic"])
        p.add_argument("--seed", type=int)
        p.add_argument("--train-end", type=_date, dest="train_end")
        p.add_argument("--test-start", type=_date, dest="test_start")
        p.add_argument("--test-end", type=_date, dest="test_end")
        p.add_argument("--n-trees", type=int, dest="n_trees")
        p.add_argument("--depth", type=int)
        p.add_argument("--shrinkage", type=float)
        p.add_argument("--min-leaf", type=int, dest="min_leaf")
        p.add_argument("--lr", type=float)
        p.add_argument("--l2", type=float)
        p.add_argument("--epochs", type=int)
        if extra:
            p.add_argument("--ablation", action="store_true",
                           help="run the feature-group ablation ladder")

    p = sub.add_parser("report", help="write descriptive statistics tables")
    p.add_argument("--buckets", type=int, help="rating buckets for loss tables")

    return parser


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "rate": cmd_rate,
    "features": cmd_features,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    ws = Workspace(args.workspace)
    if args.command not in ("synth", "ingest") and not ws.root.exists():
        print(f"error: workspace {ws.root} does not exist", file=sys.stderr)
        return EXIT_MISSING_DEPENDENCY
    ws.root.mkdir(parents=True, exist_ok=True)
    config = _Config(args, ws.read_config())
    try:
        return COMMANDS[args.command](ws, args, config)
    except MissingDependencyError as exc:
        print(f"error: {exc} (run the producing stage first)", file=sys.stderr)
        return EXIT_MISSING_DEPENDENCY
    except (DataError, ConfigurationError, SgfError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
