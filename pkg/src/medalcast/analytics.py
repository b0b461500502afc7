"""Statistical tests and attribution used to interpret the forecasts."""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import (
    AttributionError,
    DegenerateError,
    DomainRangeError,
    InsufficientDataError,
    PartitionError,
    ShapeError,
    UndefinedTestError,
)

MAX_SHAPLEY_FEATURES = 20


@dataclass(frozen=True)
class RunsTestResult:
    n1: int
    n2: int
    r: int
    expected_runs: float
    variance_runs: float
    z: float
    p_value: float


@dataclass(frozen=True)
class ContingencyTable2x2:
    n11: int
    n12: int
    n21: int
    n22: int

    def matrix(self) -> np.ndarray:
        return np.array([[self.n11, self.n12], [self.n21, self.n22]], dtype=np.float64)


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float  # upper tail of chi-square with df=1
    p_value_one_sided: float  # half of it, for a directional reading
    expected: np.ndarray
    low_expected: bool  # some expected cell is not above 5


@dataclass(frozen=True)
class CoachEffectResult:
    rmse_coach: float
    rmse_base: float
    effect: float
    e_coach: float | None = None
    index_coach: float | None = None


def binarize_by_mean(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0:
        raise DegenerateError("empty series")
    return (x > x.mean()).astype(np.int64)


def count_runs(seq) -> int:
    s = np.asarray(seq)
    return int(1 + np.count_nonzero(s[1:] != s[:-1])) if s.size else 0


def runs_moments(n1: int, n2: int) -> tuple[float, float]:
    """Mean and variance of the run count under random ordering."""
    n = n1 + n2
    mean = 2.0 * n1 * n2 / n + 1.0
    var = 2.0 * n1 * n2 * (2.0 * n1 * n2 - n1 - n2) / (n * n * (n - 1))
    return mean, var


def runs_test(seq) -> RunsTestResult:
    """Wald-Wolfowitz runs test with a two-sided normal p-value."""
    s = np.asarray(seq)
    values = set(s.tolist())
    if len(values) != 2:
        raise UndefinedTestError("runs test needs both symbols present")
    lo, hi = sorted(values)
    n1 = int(np.count_nonzero(s == hi))
    n2 = int(np.count_nonzero(s == lo))
    r = count_runs(s)
    mean, var = runs_moments(n1, n2)
    if var <= 0.0:
        raise UndefinedTestError("runs variance is zero")
    z = (r - mean) / math.sqrt(var)
    p = float(2.0 * stats.norm.sf(abs(z)))
    return RunsTestResult(n1, n2, r, mean, var, z, min(1.0, p))


def chi_square_2x2(table) -> ChiSquareResult:
    """Pearson chi-square on a 2x2 table, no continuity correction."""
    if isinstance(table, ContingencyTable2x2):
        O = table.matrix()
    else:
        O = np.asarray(table, dtype=np.float64)
    if O.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 table, got {O.shape}")
    if np.any(O < 0):
        raise DomainRangeError("negative count")
    rows, cols = O.sum(axis=1), O.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise DegenerateError("zero marginal total")
    E = np.outer(rows, cols) / O.sum()
    chi2 = float(np.sum((O - E) ** 2 / E))
    p = float(stats.chi2.sf(chi2, df=1))
    return ChiSquareResult(chi2, p, 0.5 * p, E, bool(np.any(E <= 5.0)))


def spearman(x, y) -> float:
    """Rank correlation; average ranks for ties, Pearson on the ranks."""
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError("spearman needs two 1-d inputs of equal length")
    if a.size < 2:
        raise DegenerateError("spearman needs at least 2 points")
    ra, rb = stats.rankdata(a), stats.rankdata(b)
    n = a.size
    if len(set(ra)) == n and len(set(rb)) == n:
        d2 = float(np.sum((ra - rb) ** 2))
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    da, db = ra - ra.mean(), rb - rb.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise DegenerateError("constant input has no rank correlation")
    return float(da @ db) / denom


@dataclass
class ShapleyConfig:
    features: list[str]
    value: object  # callable: frozenset of feature names -> float
    baselines: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.features) > MAX_SHAPLEY_FEATURES:
            raise DomainRangeError(f"exact Shapley limited to {MAX_SHAPLEY_FEATURES} features")
        if len(set(self.features)) != len(self.features):
            raise ValueError("duplicate feature names")


def shapley_exact(cfg: ShapleyConfig) -> dict[str, float]:
    """Exact Shapley values by weighted enumeration of every subset."""
    F = list(cfg.features)
    n = len(F)
    cache: dict[int, float] = {}

    def f(mask: int) -> float:
        if mask not in cache:
            subset = frozenset(F[i] for i in range(n) if mask >> i & 1)
            try:
                cache[mask] = float(cfg.value(subset))
            except Exception as exc:
                raise AttributionError(f"evaluation failed on subset {sorted(subset)}", subset=subset) from exc
        return cache[mask]

    weight = [math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)]
    out = {}
    for i, name in enumerate(F):
        bit = 1 << i
        total = 0.0
        for mask in range(1 << n):
            if mask & bit:
                continue
            total += weight[bin(mask).count("1")] * (f(mask | bit) - f(mask))
        out[name] = total
    return out


def shapley_permutation(cfg: ShapleyConfig) -> dict[str, float]:
    """Average marginal contribution over all orderings (small feature sets only)."""
    F = list(cfg.features)
    acc = dict.fromkeys(F, 0.0)
    perms = list(itertools.permutations(F))
    for perm in perms:
        seen: set[str] = set()
        prev = float(cfg.value(frozenset()))
        for name in perm:
            seen.add(name)
            cur = float(cfg.value(frozenset(seen)))
            acc[name] += cur - prev
            prev = cur
    return {k: v / len(perms) for k, v in acc.items()}


def baseline_game(model, x: dict[str, float], baselines: dict[str, float]):
    """Value function that replaces features outside S by their baselines."""

    def value(S):
        return model({k: (x[k] if k in S else baselines[k]) for k in x})

    return value


def _rmse(err) -> float:
    return math.sqrt(float(np.mean(np.square(err))))


def coach_effect_rmse(predictions: dict, actuals: dict, coach_years) -> CoachEffectResult:
    """RMSE over coached years minus RMSE over the remaining years."""
    if set(predictions) != set(actuals):
        raise ShapeError("predictions and actuals cover different years")
    coach_years = set(coach_years)
    coach = [predictions[y] - actuals[y] for y in sorted(predictions) if y in coach_years]
    base = [predictions[y] - actuals[y] for y in sorted(predictions) if y not in coach_years]
    if not coach or not base:
        raise PartitionError("coach years must split the years into two non-empty parts")
    return effect_from_rmse(_rmse(coach), _rmse(base))


def effect_from_rmse(rmse_coach: float, rmse_base: float) -> CoachEffectResult:
    return CoachEffectResult(rmse_coach, rmse_base, rmse_coach - rmse_base)


def coach_effect_coefficient(series) -> float:
    """Largest sustained relative jump or drop against the trailing 4-Games mean.

    For each position t with four predecessors, the relative change of M_t
    against their mean is scaled by the share of years t..t+3 (clipped at
    the series end, denominator kept at 4) that stay on the same side of
    that mean.
    """
    M = np.asarray(series, dtype=np.float64)
    if M.size < 5:
        raise InsufficientDataError("coach effect coefficient needs at least 5 values")
    best = None
    for t in range(4, M.size):
        avg = M[t - 4 : t].mean()
        if avg == 0.0:
            continue
        rel = (M[t] - avg) / avg
        window = M[t : t + 4]
        if rel > 0:
            hits = int(np.count_nonzero(window > avg))
        elif rel < 0:
            hits = int(np.count_nonzero(window < avg))
        else:
            hits = 0
        val = abs(rel * hits / 4.0)
        best = val if best is None else max(best, val)
    if best is None:
        raise DegenerateError("every trailing mean is zero")
    return best


def coach_impact_index(v_p: float, e_coach: float) -> float:
    if v_p < 0:
        raise DomainRangeError("V_p must be non-negative")
    return v_p * (1.0 + e_coach)


@dataclass(frozen=True)
class GenderYear:
    year: int
    male: int
    female: int

    @property
    def ratio(self) -> float | None:
        """Male/female ratio; ``inf`` with no female medalists, ``None`` with none at all."""
        if self.female:
            return self.male / self.female
        return math.inf if self.male else None


def gender_trend(athletes) -> tuple[list[GenderYear], GenderYear]:
    """Medal-winning entries by sex per year, plus totals (year 0)."""
    counts: dict[int, list[int]] = defaultdict(lambda: [0, 0])
    for r in athletes:
        c = counts[r.year]
        if not r.is_medal:
            continue
        if r.sex == "M":
            c[0] += 1
        elif r.sex == "F":
            c[1] += 1
    years = [GenderYear(y, *counts[y]) for y in sorted(counts)]
    total = GenderYear(0, sum(g.male for g in years), sum(g.female for g in years))
    return years, total
