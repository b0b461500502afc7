"""End-to-end wiring from a cleaned panel to trained model and forecasts.

For a country with Games 1..T, step ``t`` (t = 2..T) feeds the LSTM

* the athlete aggregate as of Games ``t-1``,
* a team block standing in for Games ``t``: the ARIMA forecast from the
  team embeddings of Games 1..t-1 (hybrid), or simply the embedding of
  Games ``t-1`` (ablated, and the hybrid's fallback on short histories),
* the host row for Games ``t``,

and the target is the true team embedding of Games ``t``. The final step
of every country is held out for evaluation; one more step (Games T+1)
gives the forecast.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import arima, lstm, predict
from .embed import (
    SCALAR_FEATURES,
    EmbeddingCodebook,
    _stable_hash,
    athlete_vector,
    default_vocabularies,
    summarize_athletes,
    team_matrix,
)
from .errors import DomainRangeError, InsufficientDataError, SchemaError
from .ingest import HISTORICAL_RANGES, Panel, PanelEntry
from .pca import EigenDecomposition, ProjectionMatrix, fit_pca
from .statematrix import N_SPORTS, SportIndex, accumulate_athletes, assemble, host_row


@dataclass
class RunConfig:
    athletes: str | None = None
    tallies: str | None = None
    hosts: str | None = None
    registry: str | None = None
    out: str = "medalcast-out"
    seed: int = 42
    embedding_dim: int = 10
    pca_k: int = 5
    window: int = 5
    max_p: int = 3
    max_q: int = 3
    d: int = 1
    criterion: str = "bic"
    min_arima_rows: int = arima.MIN_CHANNEL_ROWS
    epochs: int = 500
    hidden: int = 32
    learning_rate: float = 0.5
    grad_clip: float = 5.0
    init_scale: float = 0.08
    forget_bias: bool = True
    knn_k: int = 2
    logistic_slope: float = predict.LOGISTIC_SLOPE
    no_arima: bool = False
    next_host: str | None = None
    host_country: str | None = None
    jobs: int = 1

    @classmethod
    def from_json(cls, doc: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - names)
        if unknown:
            raise SchemaError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None

    def to_json(self) -> dict:
        return dataclasses.asdict(self)

    def train_config(self) -> lstm.TrainConfig:
        return lstm.TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            grad_clip=self.grad_clip,
            seed=derive_seed(self.seed, "lstm"),
            init_scale=self.init_scale,
            hidden_dim=self.hidden,
            forget_bias=self.forget_bias,
        )


def derive_seed(seed: int, name: str) -> int:
    """Independent 32-bit seed for the named consumer of randomness."""
    return int(np.random.SeedSequence([seed & 0xFFFFFFFF, _stable_hash(name) & 0xFFFFFFFF]).generate_state(1)[0])


def rng_for(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, name))


@dataclass
class Features:
    codebook: EmbeddingCodebook
    projection: ProjectionMatrix
    decomposition: EigenDecomposition
    index: SportIndex


def build_features(panel: Panel, cfg: RunConfig, upto_edition: int | None = None,
                   index: SportIndex | None = None) -> Features:
    """Codebook over the panel's vocabulary and PCA of athlete vectors.

    Scalar codebooks reach the historical maxima or the largest observed
    count, whichever is higher. PCA sees athletes up to ``upto_edition``.
    """
    index = index or SportIndex.default()
    n_editions = max((e.edition for rows in panel.entries.values() for e in rows), default=len(panel.years))
    maxima = dict(HISTORICAL_RANGES)
    for rows in panel.entries.values():
        for e in rows:
            for f in SCALAR_FEATURES:
                maxima[f] = max(maxima[f], getattr(e, f))
    vocab = default_vocabularies(panel.countries, n_editions, index.names)
    codebook = EmbeddingCodebook.build(vocab, maxima, seed=cfg.seed, dim=cfg.embedding_dim)
    summaries = summarize_athletes(panel.athletes, upto=upto_edition)
    if len(summaries) < 2:
        raise InsufficientDataError("PCA needs at least two athletes")
    P, decomp = fit_pca([athlete_vector(codebook, s) for s in summaries], cfg.pca_k)
    return Features(codebook=codebook, projection=P, decomposition=decomp, index=index)


@dataclass
class CountrySequence:
    noc: str
    years: list[int]  # target year of each step
    M: np.ndarray  # (S+1, 71, 5) athlete block, unscaled; last row is the forecast step
    N_in: np.ndarray  # (S+1, 10, 5) team block fed to the model
    host: np.ndarray  # (S+1,) host flag
    targets: np.ndarray  # (S, 50) true team embeddings
    counts: list[PanelEntry]  # true entries aligned with targets
    arima_steps: int = 0

    def inputs(self, athlete_scale: float) -> np.ndarray:
        rows = []
        for M, N, h in zip(self.M, self.N_in, self.host):
            rows.append(assemble(M / athlete_scale, N, host_row(bool(h))).ravel())
        return np.asarray(rows)


class ArimaCache:
    """Memo of channelwise forecasts keyed by the exact history."""

    def __init__(self):
        self._store: dict[tuple, tuple[np.ndarray, list]] = {}
        self.hits = 0

    def forecast(self, history: np.ndarray, cfg: RunConfig):
        key = (history.shape, history.tobytes(), cfg.d, cfg.criterion, cfg.min_arima_rows)
        if key in self._store:
            self.hits += 1
        else:
            self._store[key] = arima.fit_channelwise(
                history.reshape(len(history), -1), d=cfg.d, criterion=cfg.criterion,
                min_rows=cfg.min_arima_rows, shape=history.shape[1:],
            )
        return self._store[key]


def build_sequences(panel: Panel, feats: Features, cfg: RunConfig, use_arima: bool,
                    cache: ArimaCache | None = None, next_host: str | None = None) -> list[CountrySequence]:
    cache = cache or ArimaCache()
    out = []
    for noc in panel.countries:
        entries = panel.entries[noc]
        if len(entries) < 3:
            continue
        records = panel.athletes_of(noc)
        N_true = np.array([team_matrix(feats.codebook, e) for e in entries])
        Ms, Ns, hosts, n_arima = [], [], [], 0
        for t in range(1, len(entries) + 1):  # position of the target Games, len = forecast
            prev = entries[t - 1]
            Ms.append(accumulate_athletes(records, prev.edition, feats.codebook, feats.projection,
                                          feats.index, window=cfg.window))
            N_hat = N_true[t - 1]
            if use_arima and t >= cfg.min_arima_rows:
                N_hat, _ = cache.forecast(N_true[:t], cfg)
                n_arima += 1
            Ns.append(N_hat)
            hosts.append(entries[t].host if t < len(entries) else noc == next_host)
        out.append(CountrySequence(
            noc=noc,
            years=[e.year for e in entries[1:]],
            M=np.array(Ms),
            N_in=np.array(Ns),
            host=np.array(hosts, dtype=bool),
            targets=N_true[1:].reshape(len(entries) - 1, -1),
            counts=list(entries[1:]),
            arima_steps=n_arima,
        ))
    if not out:
        raise InsufficientDataError("no country has three or more Games")
    return out


def athlete_scale(sequences) -> float:
    top = max(float(np.abs(s.M).max(initial=0.0)) for s in sequences)
    return top if top > 0.0 else 1.0


@dataclass
class Evaluation:
    rmse: float
    mae: float
    accuracy: float  # share of held-out gold/silver/bronze counts inside their interval
    hits: int
    total: int


@dataclass
class RunResult:
    config: RunConfig
    features: Features
    sequences: list[CountrySequence]
    athlete_scale: float
    params: lstm.LstmParams
    losses: list[float]
    evaluation: Evaluation
    forecasts: dict[str, np.ndarray] = field(default_factory=dict)  # noc -> 50-vector for Games T+1
    holdout: dict[str, np.ndarray] = field(default_factory=dict)  # noc -> 50-vector for Games T


def train_and_evaluate(panel: Panel, cfg: RunConfig, cache: ArimaCache | None = None,
                       use_arima: bool | None = None) -> RunResult:
    use_arima = (not cfg.no_arima) if use_arima is None else use_arima
    last_train = max(e.edition for rows in panel.entries.values() for e in rows[:-1])
    feats = build_features(panel, cfg, upto_edition=last_train)
    seqs = build_sequences(panel, feats, cfg, use_arima, cache, next_host=cfg.next_host)
    scale = athlete_scale(seqs)
    inputs = {s.noc: s.inputs(scale) for s in seqs}
    dataset = [(inputs[s.noc][: len(s.targets) - 1], s.targets[:-1]) for s in seqs]
    result = lstm.train(dataset, cfg.train_config())
    params = result.params

    holdout, forecasts = {}, {}
    preds, truths = [], []
    hits = total = 0
    for s in seqs:
        out = lstm.forward_sequence(params, inputs[s.noc])
        holdout[s.noc] = out[-2]
        forecasts[s.noc] = out[-1]
        preds.append(out[-2])
        truths.append(s.targets[-1])
        intervals = predict.decode(out[-2], feats.codebook, cfg.knn_k)
        for f in predict.MEDAL_FEATURES:
            hits += intervals[f].contains(getattr(s.counts[-1], f))
            total += 1
    ev = Evaluation(
        rmse=lstm.loss_rmse(truths, preds),
        mae=lstm.loss_mae(truths, preds),
        accuracy=hits / total,
        hits=hits,
        total=total,
    )
    return RunResult(cfg, feats, seqs, scale, params, result.losses, ev, forecasts, holdout)


def ablation_run(panel: Panel, cfg: RunConfig, cache: ArimaCache | None = None) -> dict[str, dict[str, float]]:
    """Hybrid and ARIMA-free variants trained with identical seeds and epochs."""
    table = {}
    for name, use in (("hybrid", True), ("lstm_only", False)):
        ev = train_and_evaluate(panel, cfg, cache, use_arima=use).evaluation
        table[name] = {"rmse": ev.rmse, "mae": ev.mae}
    return table


SENSITIVITY_FRACTIONS = (1.0, 0.75, 0.5)


def subsample_panel(panel: Panel, athlete_fraction: float, history_fraction: float, seed: int) -> Panel:
    """Keep a seeded share of athletes and of Games years.

    The final year is always kept so every cell is scored on the same
    Games; a fraction of 1.0 keeps everything untouched.
    """
    for frac in (athlete_fraction, history_fraction):
        if not 0.0 < frac <= 1.0:
            raise DomainRangeError(f"fraction {frac} outside (0, 1]")
    years = list(panel.years)
    if history_fraction < 1.0:
        rng = rng_for(seed, "sensitivity.history")
        keep = max(3, math.ceil(history_fraction * len(years)))
        earlier = sorted(rng.choice(len(years) - 1, size=keep - 1, replace=False).tolist())
        years = [years[i] for i in earlier] + [years[-1]]
    kept_years = set(years)
    athletes = [a for a in panel.athletes if a.year in kept_years]
    if athlete_fraction < 1.0:
        keys = sorted({(a.name, a.noc, a.sex or "") for a in athletes})
        rng = rng_for(seed, "sensitivity.athletes")
        n = max(2, math.ceil(athlete_fraction * len(keys)))
        chosen = {keys[i] for i in rng.choice(len(keys), size=n, replace=False).tolist()}
        athletes = [a for a in athletes if (a.name, a.noc, a.sex or "") in chosen]
    entries = {noc: [e for e in rows if e.year in kept_years] for noc, rows in panel.entries.items()}
    return Panel(years=years, entries=entries, hosts=panel.hosts, athletes=athletes)


def sensitivity_grid(panel: Panel, cfg: RunConfig, fractions=SENSITIVITY_FRACTIONS,
                     cache: ArimaCache | None = None) -> dict[tuple[float, float], float | None]:
    """Interval hit accuracy for every (athlete share, history share) pair.

    A cell whose reduced panel cannot be trained holds ``None``.
    """
    cache = cache or ArimaCache()
    grid = {}
    for a in fractions:
        for h in fractions:
            reduced = subsample_panel(panel, a, h, cfg.seed)
            try:
                grid[(a, h)] = train_and_evaluate(reduced, cfg, cache).evaluation.accuracy
            except InsufficientDataError:
                grid[(a, h)] = None
    return grid
