"""Decode LSTM outputs back to medal counts and derive per-country reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embed import SCALAR_FEATURES, EmbeddingCodebook
from .errors import DegenerateError, DomainRangeError, ShapeError
from .lstm import LstmParams, predict_next
from .statematrix import N_SPORTS, STATE_ROWS, TEAM_ROWS, WIDTH

LOGISTIC_SLOPE = 5.0
MEDAL_FEATURES = ("gold", "silver", "bronze")


@dataclass(frozen=True)
class PredictionInterval:
    lo: int
    hi: int
    nn_distances: tuple[float, float]

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, count) -> bool:
        return self.lo <= count <= self.hi


@dataclass(frozen=True)
class FirstMedalResult:
    noc: str
    probability: float
    predicted_first_medal: bool


def euclidean(x_q, x_i) -> float:
    a = np.asarray(x_q, dtype=np.float64)
    b = np.asarray(x_i, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"dimension mismatch {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def knn_interval(v, entries, k: int = 2) -> PredictionInterval:
    """Interval spanned by the ``k`` codewords nearest to ``v``.

    ``entries`` is a list of ``(count, codeword)`` pairs. Equal distances go
    to the smaller count.
    """
    if not entries:
        raise DomainRangeError("empty codebook")
    if not 1 <= k <= len(entries):
        raise DomainRangeError(f"k={k} outside [1, {len(entries)}]")
    dist = sorted((euclidean(v, vec), count) for count, vec in entries)
    best = dist[:k]
    counts = sorted(c for _, c in best)
    d = tuple(float(x) for x, _ in best)
    if len(d) == 1:
        d = (d[0], d[0])
    return PredictionInterval(lo=counts[0], hi=counts[-1], nn_distances=d[:2])


def decode(output, codebook: EmbeddingCodebook, k: int = 2) -> dict[str, PredictionInterval]:
    """Split a 50-vector into its five 10-dim feature columns and decode each."""
    N = np.asarray(output, dtype=np.float64).reshape(TEAM_ROWS, WIDTH)
    return {f: knn_interval(N[:, j], codebook.entries(f), k) for j, f in enumerate(SCALAR_FEATURES)}


def first_medal_probability(v_total, entries, slope: float = LOGISTIC_SLOPE, noc: str = "") -> FirstMedalResult:
    """Logistic map of the relative distance to the codewords of 0 and 1."""
    table = dict(entries)
    if 0 not in table or 1 not in table:
        raise DegenerateError("codebook lacks counts 0 and 1")
    d0 = euclidean(v_total, table[0])
    d1 = euclidean(v_total, table[1])
    if d0 + d1 == 0.0:
        raise DegenerateError("codewords for 0 and 1 coincide")
    u = (d0 - d1) / (d0 + d1)
    p = 1.0 / (1.0 + math.exp(-slope * u))
    return FirstMedalResult(noc=noc, probability=p, predicted_first_medal=p > 0.5)


def medal_total(intervals: dict[str, PredictionInterval]) -> float:
    return sum(intervals[f].mid for f in MEDAL_FEATURES)


def _pct(base: float, new: float) -> float:
    if base == 0.0:
        return 0.0 if new == 0.0 else math.inf
    return 100.0 * (new - base) / base


@dataclass
class HostEffect:
    per_sport: dict[str, float]  # percentage change in predicted total medals
    base_totals: dict[str, float]
    aggregate: float


def host_effect(params: LstmParams, history, sport_names, codebook: EmbeddingCodebook,
                k: int = 2, host_values=(0.0, 1.0)) -> HostEffect:
    """Medal-total change when the last state's host row flips off to on.

    Each sport is evaluated on its own: the last state keeps that sport's
    athlete row only. The aggregate weights sport deltas by their
    host-off totals; sports predicted at zero drop out of it.
    """
    history = [np.asarray(s, dtype=np.float64) for s in history]
    if not history or history[-1].shape != (STATE_ROWS, WIDTH):
        raise ShapeError("host_effect needs a non-empty history of 82x5 states")
    last = history[-1]
    per_sport, base_totals = {}, {}
    for r, name in enumerate(sport_names):
        if not np.any(last[r]):
            continue
        totals = []
        for hv in host_values:
            X = np.zeros_like(last)
            X[r] = last[r]
            X[N_SPORTS:] = last[N_SPORTS:]
            X[-1] = hv
            totals.append(medal_total(decode(predict_next(params, history[:-1] + [X]), codebook, k)))
        base_totals[name] = totals[0]
        per_sport[name] = _pct(totals[0], totals[1])
    weights = {s: w for s, w in base_totals.items() if w > 0}
    total_w = sum(weights.values())
    aggregate = sum(per_sport[s] * w for s, w in weights.items()) / total_w if total_w else 0.0
    return HostEffect(per_sport=per_sport, base_totals=base_totals, aggregate=aggregate)


def sport_importance(state, sport_names) -> list[tuple[str, float]]:
    """Sports ranked by the L2 norm of their state row, ties in index order."""
    X = np.asarray(state, dtype=np.float64)
    if X.shape != (STATE_ROWS, WIDTH):
        raise ShapeError(f"state must be {STATE_ROWS}x{WIDTH}, got {X.shape}")
    norms = np.linalg.norm(X[:N_SPORTS], axis=1)
    order = sorted(range(N_SPORTS), key=lambda i: (-norms[i], i))
    return [(sport_names[i], float(norms[i])) for i in order]


PREDICTION_COLUMNS = ("noc", "year", "gold_lo", "gold_hi", "silver_lo", "silver_hi",
                      "bronze_lo", "bronze_hi", "total_mid")


def prediction_row(noc: str, year: int, intervals: dict[str, PredictionInterval]) -> list:
    row = [noc, year]
    for f in MEDAL_FEATURES:
        row += [intervals[f].lo, intervals[f].hi]
    return row + [medal_total(intervals)]


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
