"""Command-line entry point: ``medalcast <ingest|train|predict|analyze>``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analytics, ingest, lstm, pipeline, predict
from .embed import EmbeddingCodebook
from .errors import MedalcastError, SchemaError, StateError
from .statematrix import N_SPORTS, SportIndex, STATE_ROWS, WIDTH

INGEST_DIR = "ingest"
MODEL_DIR = "model"
PREDICT_DIR = "predict"
ANALYZE_DIR = "analyze"
MANIFEST = "manifest.json"
MODEL_FILES = ("config.json", "codebook.json", "projection.json", "lstm.json", "inputs.json")
ANALYSES = ("runs", "chi2", "spearman", "shapley", "coach", "gender", "ablate", "sensitivity")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if dataclasses.is_dataclass(x):
        return dataclasses.asdict(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _finite(x):
    """JSON has no infinity; map non-finite floats to strings."""
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


def write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_dump(_finite(obj)), encoding="utf-8")


def write_manifest(out: Path) -> dict[str, str]:
    """Hash every artifact under ``out`` into ``manifest.json``."""
    entries = {}
    for p in sorted(out.rglob("*")):
        if p.is_file() and p.name != MANIFEST:
            entries[p.relative_to(out).as_posix()] = hashlib.sha256(p.read_bytes()).hexdigest()
    (out / MANIFEST).write_text(_dump({"artifacts": entries}), encoding="utf-8")
    return entries


# -- configuration ---------------------------------------------------------

_OVERRIDES = {
    "athletes": str, "tallies": str, "hosts": str, "registry": str, "out": str,
    "seed": int, "window": int, "epochs": int, "hidden": int, "learning_rate": float,
    "grad_clip": float, "logistic_slope": float, "criterion": str, "next_host": str,
    "host_country": str,
}


def resolve_config(args) -> pipeline.RunConfig:
    """File values, then MEDALCAST_SEED, then explicit flags."""
    cfg = pipeline.RunConfig.load(args.config) if args.config else pipeline.RunConfig()
    env_seed = os.environ.get("MEDALCAST_SEED")
    if env_seed:
        try:
            cfg.seed = int(env_seed)
        except ValueError:
            raise SchemaError(f"MEDALCAST_SEED must be an integer, got {env_seed!r}") from None
    for name in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "no_arima", False):
        cfg.no_arima = True
    if getattr(args, "no_forget_bias", False):
        cfg.forget_bias = False
    return cfg


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise StateError(f"missing {what}: {path} (run the earlier command first)")
    return path


def _load_clean(out: Path):
    d = out / INGEST_DIR
    paths = {k: _require(d / v, "ingest artifact") for k, v in ingest.CLEAN_FILES.items()}
    panel, _ = ingest.load_all(paths["athletes"], paths["tallies"], paths["hosts"])
    return panel


# -- commands --------------------------------------------------------------

def cmd_ingest(cfg: pipeline.RunConfig) -> dict:
    for key in ("athletes", "tallies", "hosts"):
        path = getattr(cfg, key)
        if not path:
            raise SchemaError(f"no {key} file configured")
        if not Path(path).exists():
            raise SchemaError(f"input file not found: {path}")
    registry = ingest.NocRegistry.from_csv(cfg.registry) if cfg.registry else None
    panel, report = ingest.load_all(cfg.athletes, cfg.tallies, cfg.hosts, registry)
    out = Path(cfg.out)
    ingest.write_clean(panel, out / INGEST_DIR)
    write_json(out / INGEST_DIR / "report.json", report)
    return report


def cmd_train(cfg: pipeline.RunConfig) -> dict:
    out = Path(cfg.out)
    panel = _load_clean(out)
    result = pipeline.train_and_evaluate(panel, cfg)
    d = out / MODEL_DIR
    d.mkdir(parents=True, exist_ok=True)
    # the output location is not a run parameter; leaving it out keeps runs comparable
    write_json(d / "config.json", {k: v for k, v in cfg.to_json().items() if k != "out"})
    result.features.codebook.save(d / "codebook.json")
    result.features.projection.save(d / "projection.json")
    result.params.save(d / "lstm.json")
    lstm.save_trace(result.losses, d / "loss_trace.csv")
    inputs = {s.noc: s.inputs(result.athlete_scale).tolist() for s in result.sequences}
    write_json(d / "inputs.json", {
        "athlete_scale": result.athlete_scale,
        "next_year": panel.years[-1] + 4,
        "last_year": panel.years[-1],
        "medal_history": {noc: sum(e.gold + e.silver + e.bronze for e in panel.entries[noc])
                          for noc in panel.countries},
        "inputs": inputs,
    })
    ev = dataclasses.asdict(result.evaluation)
    ev["variant"] = "lstm_only" if cfg.no_arima else "hybrid"
    ev["arima_steps"] = {s.noc: s.arima_steps for s in result.sequences}
    write_json(d / "evaluation.json", ev)
    return ev


def _load_model(out: Path):
    d = out / MODEL_DIR
    for name in MODEL_FILES:
        _require(d / name, "model checkpoint")
    codebook = EmbeddingCodebook.load(d / "codebook.json")
    params = lstm.LstmParams.load(d / "lstm.json")
    doc = json.loads((d / "inputs.json").read_text(encoding="utf-8"))
    trained = json.loads((d / "config.json").read_text(encoding="utf-8"))
    return codebook, params, doc, trained


def cmd_predict(cfg: pipeline.RunConfig) -> dict:
    out = Path(cfg.out)
    codebook, params, doc, trained = _load_model(out)
    names = SportIndex.default().names
    k = trained.get("knn_k", cfg.knn_k)
    d = out / PREDICT_DIR
    d.mkdir(parents=True, exist_ok=True)
    year = doc["next_year"]

    rows, first, importance, totals = [], [], [], {}
    for noc in sorted(doc["inputs"]):
        X = np.asarray(doc["inputs"][noc])
        v = lstm.forward_sequence(params, X)[-1]
        intervals = predict.decode(v, codebook, k)
        rows.append(predict.prediction_row(noc, year, intervals))
        totals[noc] = predict.medal_total(intervals)
        if doc["medal_history"].get(noc, 0) == 0:
            N = v.reshape(10, 5)
            best = max(
                (predict.first_medal_probability(N[:, j], codebook.entries(f), cfg.logistic_slope, noc)
                 for j, f in enumerate(predict.MEDAL_FEATURES)),
                key=lambda r: r.probability,
            )
            first.append([noc, best.probability, int(best.predicted_first_medal)])
        ranked = predict.sport_importance(X[-1].reshape(STATE_ROWS, WIDTH), names)
        importance += [[noc, rank + 1, sport, norm] for rank, (sport, norm) in enumerate(ranked)]

    predict.write_csv(d / "predictions.csv", predict.PREDICTION_COLUMNS, rows)
    predict.write_csv(d / "first_medal.csv", ("noc", "probability", "flag"), first)
    predict.write_csv(d / "sport_importance.csv", ("noc", "rank", "sport", "norm"), importance)

    host = cfg.host_country or cfg.next_host or (max(totals, key=lambda n: (totals[n], n)) if totals else None)
    effect_rows = []
    if host in doc["inputs"]:
        history = [np.asarray(x).reshape(STATE_ROWS, WIDTH) for x in doc["inputs"][host]]
        effect = predict.host_effect(params, history, names, codebook, k)
        effect_rows = [[host, s, effect.base_totals[s], effect.per_sport[s]] for s in effect.per_sport]
        effect_rows.append([host, "ALL", sum(effect.base_totals.values()), effect.aggregate])
    predict.write_csv(d / "host_effect.csv", ("noc", "sport", "base_total", "delta_pct"), effect_rows)
    return {"countries": len(rows), "year": year, "host_country": host}


# -- analyze ---------------------------------------------------------------

def _read_column(path, column=None) -> list[float]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise SchemaError(f"{path}: empty input")
    header = rows[0]
    try:
        float(header[0])
        body = rows
        idx = 0
    except ValueError:
        body = rows[1:]
        idx = header.index(column) if column else 0
    try:
        return [float(r[idx]) for r in body]
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: {exc}") from None


def _read_columns(path, names) -> dict[str, list[float]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [n for n in names if n not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"{path}: missing column(s) {', '.join(missing)}")
        rows = list(reader)
    try:
        return {n: [float(r[n]) for r in rows] for n in names}
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def _parse_years(spec: str) -> set[int]:
    years = set()
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            a, b = (int(x) for x in part.split("-", 1))
            years.update(range(a, b + 1))
        else:
            years.add(int(part))
    return years


def _toy_game():
    table = {(): 0, (1,): 1, (2,): 2, (3,): 0, (1, 2): 4, (1, 3): 1, (2, 3): 2, (1, 2, 3): 5}
    return ["1", "2", "3"], {",".join(str(i) for i in k): v for k, v in table.items()}


def _game_from_json(path):
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    features = [str(f) for f in doc["features"]]
    values = {",".join(sorted(k.split(","), key=features.index)) if k else "": float(v)
              for k, v in doc["values"].items()}
    return features, values


def _model_game(out: Path, cfg):
    """Shapley game over the athlete, team and host blocks of one country's last state."""
    codebook, params, doc, trained = _load_model(out)
    inputs = {n: np.asarray(x) for n, x in doc["inputs"].items()}
    noc = cfg.host_country or max(sorted(inputs), key=lambda n: doc["medal_history"].get(n, 0))
    stacked = np.vstack([x[:-1] for x in inputs.values()]).reshape(-1, STATE_ROWS, WIDTH)
    baseline = stacked.mean(axis=0)
    X = inputs[noc]
    blocks = {"athlete": slice(0, N_SPORTS), "team": slice(N_SPORTS, STATE_ROWS - 1), "host": slice(STATE_ROWS - 1, STATE_ROWS)}

    def value(S):
        last = X[-1].reshape(STATE_ROWS, WIDTH).copy()
        for name, sl in blocks.items():
            if name not in S:
                last[sl] = baseline[sl]
        seq = np.vstack([X[:-1], last.ravel()])
        return predict.medal_total(predict.decode(lstm.forward_sequence(params, seq)[-1], codebook))

    return noc, list(blocks), value


def cmd_analyze(cfg: pipeline.RunConfig, args) -> dict:
    out = Path(cfg.out)
    name = args.analysis
    report: dict = {"analysis": name}

    if name == "runs":
        values = _read_column(_need_input(args), args.column)
        seq = analytics.binarize_by_mean(values) if args.binarize else np.asarray(values, dtype=int)
        res = analytics.runs_test(seq)
        report.update(input=list(map(int, seq)), **dataclasses.asdict(res))
    elif name == "chi2":
        if args.table:
            cells = [float(x) for x in args.table.split(",")]
        else:
            cells = _read_column(_need_input(args), args.column)
        if len(cells) != 4:
            raise SchemaError("chi2 needs four counts n11,n12,n21,n22")
        res = analytics.chi_square_2x2(np.reshape(cells, (2, 2)))
        report.update(table=cells, statistic=res.statistic, p_value_two_sided=res.p_value,
                      p_value_one_sided=res.p_value_one_sided, expected=res.expected,
                      low_expected_warning=res.low_expected, continuity_correction=False)
    elif name == "spearman":
        cols = _read_columns(_need_input(args), ["x", "y"])
        report.update(n=len(cols["x"]), rho=analytics.spearman(cols["x"], cols["y"]))
    elif name == "shapley":
        if args.input:
            features, table = _game_from_json(args.input)
            value = lambda S: table[",".join(f for f in features if f in S)]  # noqa: E731
            report["game"] = "table"
        elif (out / MODEL_DIR / "lstm.json").exists():
            noc, features, value = _model_game(out, cfg)
            report.update(game="model", noc=noc, baseline="training mean of each block")
        else:
            features, table = _toy_game()
            value = lambda S: table[",".join(f for f in features if f in S)]  # noqa: E731
            report["game"] = "toy"
        config = analytics.ShapleyConfig(features=features, value=value)
        phi = analytics.shapley_exact(config)
        full = value(frozenset(features))
        empty = value(frozenset())
        report.update(features=features, shapley=phi, f_full=full, f_empty=empty,
                      efficiency_gap=sum(phi.values()) - (full - empty))
    elif name == "coach":
        if args.rmse_coach is not None and args.rmse_base is not None:
            res = analytics.effect_from_rmse(args.rmse_coach, args.rmse_base)
        else:
            cols = _read_columns(_need_input(args), ["year", "prediction", "actual"])
            years = [int(y) for y in cols["year"]]
            if not args.coach_years:
                raise SchemaError("coach needs --coach-years (e.g. 1984-1996)")
            res = analytics.coach_effect_rmse(dict(zip(years, cols["prediction"])),
                                              dict(zip(years, cols["actual"])), _parse_years(args.coach_years))
        report.update(rmse_coach=res.rmse_coach, rmse_base=res.rmse_base, effect=res.effect)
        if args.series:
            series = _read_column(args.series, args.column)
            e = analytics.coach_effect_coefficient(series)
            report["e_coach"] = e
            if args.vp is not None:
                report["index_coach"] = analytics.coach_impact_index(args.vp, e)
    elif name == "gender":
        panel = _load_clean(out)
        years, total = analytics.gender_trend(panel.athletes)
        rows = [[g.year, g.male, g.female, "" if g.ratio is None else g.ratio] for g in years]
        predict.write_csv(out / ANALYZE_DIR / "gender.csv", ("year", "male", "female", "ratio"), rows)
        report.update(total_male=total.male, total_female=total.female, total_ratio=total.ratio, years=len(years))
    elif name == "ablate":
        panel = _load_clean(out)
        table = pipeline.ablation_run(panel, cfg)
        rows = [[variant, v["rmse"], v["mae"]] for variant, v in table.items()]
        predict.write_csv(out / ANALYZE_DIR / "ablation.csv", ("variant", "rmse", "mae"), rows)
        report.update(table=table)
    elif name == "sensitivity":
        panel = _load_clean(out)
        grid = pipeline.sensitivity_grid(panel, cfg)
        rows = [[a, h, "" if acc is None else acc] for (a, h), acc in grid.items()]
        predict.write_csv(out / ANALYZE_DIR / "sensitivity.csv", ("athlete_fraction", "history_fraction", "accuracy"), rows)
        report.update(grid=[{"athlete_fraction": a, "history_fraction": h, "accuracy": acc} for (a, h), acc in grid.items()])
    write_json(out / ANALYZE_DIR / f"{name}.json", report)
    return report


def _need_input(args) -> str:
    if not args.input:
        raise SchemaError(f"analyze {args.analysis} needs --input")
    if not Path(args.input).exists():
        raise SchemaError(f"input file not found: {args.input}")
    return args.input


# -- argument parsing ------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="medalcast", description="Olympic medal forecasting pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        return p

    p = common(sub.add_parser("ingest", help="clean the input CSVs"))
    for name in ("athletes", "tallies", "hosts", "registry"):
        p.add_argument(f"--{name}")

    p = common(sub.add_parser("train", help="fit codebook, PCA, ARIMA and LSTM"))
    p.add_argument("--no-arima", action="store_true", help="train the ARIMA-free variant")
    p.add_argument("--no-forget-bias", action="store_true")
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--grad-clip", dest="grad_clip", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--criterion", choices=("aic", "bic"))
    p.add_argument("--next-host", dest="next_host")

    p = common(sub.add_parser("predict", help="decode forecasts into reports"))
    p.add_argument("--logistic-slope", dest="logistic_slope", type=float)
    p.add_argument("--host-country", dest="host_country")

    p = common(sub.add_parser("analyze", help="statistical analyses"))
    p.add_argument("analysis", choices=ANALYSES)
    p.add_argument("--input")
    p.add_argument("--column")
    p.add_argument("--binarize", action="store_true", help="binarize a raw series by its mean first")
    p.add_argument("--table", help="n11,n12,n21,n22")
    p.add_argument("--coach-years", dest="coach_years")
    p.add_argument("--rmse-coach", dest="rmse_coach", type=float)
    p.add_argument("--rmse-base", dest="rmse_base", type=float)
    p.add_argument("--series")
    p.add_argument("--vp", type=float)
    p.add_argument("--no-arima", action="store_true")
    p.add_argument("--epochs", type=int)
    p.add_argument("--host-country", dest="host_country")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "ingest":
            result = cmd_ingest(cfg)
        elif args.command == "train":
            result = cmd_train(cfg)
        elif args.command == "predict":
            result = cmd_predict(cfg)
        else:
            result = cmd_analyze(cfg, args)
        write_manifest(Path(cfg.out))
    except MedalcastError as exc:
        print(f"medalcast {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"medalcast {args.command}: {exc}", file=sys.stderr)
        return 2
    print(_dump(_finite(result)), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
