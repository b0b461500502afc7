import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from medalcast import analytics
from medalcast.analytics import GenderYear, ShapleyConfig
from medalcast.errors import (
    AttributionError,
    DegenerateError,
    DomainRangeError,
    InsufficientDataError,
    PartitionError,
    UndefinedTestError,
)
from medalcast.ingest import AthleteRecord


def test_binarize_examples():
    assert analytics.binarize_by_mean([1, 2, 3]).tolist() == [0, 0, 1]
    assert analytics.binarize_by_mean([4, 4, 4]).tolist() == [0, 0, 0]
    assert analytics.binarize_by_mean([10, 20, 10, 20]).tolist() == [0, 1, 0, 1]


@given(st.lists(st.integers(-1000, 1000), min_size=1, max_size=30), st.integers(1, 50), st.integers(-100, 100))
def test_binarize_affine_invariant(xs, a, b):
    x = np.array(xs, dtype=np.float64)
    assert np.array_equal(analytics.binarize_by_mean(a * x + b), analytics.binarize_by_mean(x))


def test_runs_reconstructed_sequence():
    # 9 ones and 9 zeros in 6 runs reproduce the published E, V, Z and p
    seq = [1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 0]
    r = analytics.runs_test(seq)
    assert (r.n1, r.n2, r.r) == (9, 9, 6)
    assert r.expected_runs == 10.0
    assert r.variance_runs == pytest.approx(4.2353, abs=1e-4)
    assert r.z == pytest.approx(-1.9437, abs=1e-4)
    assert r.p_value == pytest.approx(0.0519, abs=1e-3)


def test_runs_alternating():
    r = analytics.runs_test([0, 1] * 5)
    assert r.r == 10 and r.expected_runs == 6.0 and r.z > 0


def test_runs_single_symbol():
    with pytest.raises(UndefinedTestError):
        analytics.runs_test([1, 1, 1, 1])


@pytest.mark.parametrize("n1,n2", [(3, 5), (9, 9), (12, 4)])
def test_runs_moments_against_monte_carlo(n1, n2):
    rng = np.random.default_rng(n1 * 100 + n2)
    base = np.array([1] * n1 + [0] * n2)
    reps = 100_000
    perms = rng.permuted(np.tile(base, (reps, 1)), axis=1)
    runs = 1 + np.count_nonzero(perms[:, 1:] != perms[:, :-1], axis=1)
    mean, var = analytics.runs_moments(n1, n2)
    assert abs(runs.mean() - mean) <= 3 * math.sqrt(var / reps)
    # the sample variance has standard error about var * sqrt(2 / reps) for near-normal counts
    assert abs(runs.var() - var) <= 3 * var * math.sqrt(2 / reps) * 1.5


def test_chi_square_examples():
    r = analytics.chi_square_2x2([[10, 10], [10, 10]])
    assert r.statistic == 0.0 and r.p_value == 1.0
    r = analytics.chi_square_2x2([[20, 10], [10, 20]])
    assert np.all(r.expected == 15.0)
    assert r.statistic == pytest.approx(4 * 25 / 15, abs=1e-12)
    assert r.p_value == pytest.approx(0.0098, abs=1e-4)
    with pytest.raises(DegenerateError):
        analytics.chi_square_2x2([[0, 5], [0, 7]])


def test_chi_square_published_statistic_p_values():
    r = analytics.chi_square_2x2([[1, 4], [4, 1]])
    assert r.statistic == pytest.approx(3.6, abs=1e-12)
    assert r.p_value == pytest.approx(0.0578, abs=1e-4)
    assert r.p_value_one_sided == pytest.approx(0.0289, abs=1e-4)
    assert r.low_expected


@given(st.lists(st.integers(1, 200), min_size=4, max_size=4))
def test_chi_square_transpose_invariant(cells):
    a, b, c, d = cells
    assert analytics.chi_square_2x2([[a, b], [c, d]]).statistic == pytest.approx(
        analytics.chi_square_2x2([[a, c], [b, d]]).statistic, rel=1e-12, abs=1e-12)


def test_spearman_examples():
    assert analytics.spearman([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert analytics.spearman([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert abs(analytics.spearman([1, 2, 3, 4, 5], [2, 1, 4, 3, 5]) - 0.8) <= 1e-12
    with pytest.raises(DegenerateError):
        analytics.spearman([1, 1, 1], [1, 2, 3])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(-100, 100), st.integers(-100, 100)), min_size=3, max_size=20))
def test_spearman_monotone_invariance(pairs):
    # integer inputs keep the transforms strictly monotone in floating point
    x = np.array([p[0] for p in pairs], dtype=np.float64)
    y = np.array([p[1] for p in pairs], dtype=np.float64)
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return
    rho = analytics.spearman(x, y)
    assert analytics.spearman(np.exp(x / 10), y) == pytest.approx(rho, abs=1e-12)
    assert analytics.spearman(x, y ** 3 - 5) == pytest.approx(rho, abs=1e-12)


def _cfg(n, table):
    feats = [f"x{i}" for i in range(n)]
    return ShapleyConfig(feats, lambda S: table[frozenset(S)])


def random_game(rng, n):
    feats = [f"x{i}" for i in range(n)]
    table = {}
    for k in range(n + 1):
        for S in itertools.combinations(feats, k):
            table[frozenset(S)] = float(rng.normal())
    return feats, table


def test_shapley_three_feature_game():
    # averaging the marginal contributions over the six orderings by hand gives
    # (11/6, 17/6, 1/3); the values sum to f(F) - f({}) = 5 as efficiency requires
    v = {(): 0, (1,): 1, (2,): 2, (3,): 0, (1, 2): 4, (1, 3): 1, (2, 3): 2, (1, 2, 3): 5}
    cfg = ShapleyConfig(["1", "2", "3"], lambda S: v[tuple(sorted(int(s) for s in S))])
    phi = analytics.shapley_exact(cfg)
    assert phi["1"] == pytest.approx(11 / 6, abs=1e-12)
    assert phi["2"] == pytest.approx(17 / 6, abs=1e-12)
    assert phi["3"] == pytest.approx(1 / 3, abs=1e-12)
    oracle = analytics.shapley_permutation(cfg)
    assert all(abs(phi[k] - oracle[k]) <= 1e-12 for k in phi)


def test_shapley_additive_game():
    w = {"a": 1.5, "b": -2.0, "c": 0.25}
    phi = analytics.shapley_exact(ShapleyConfig(list(w), lambda S: sum(w[i] for i in S)))
    assert phi == pytest.approx(w, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4, 6])
def test_shapley_axioms_on_random_games(n):
    rng = np.random.default_rng(n)
    feats, table = random_game(rng, n)
    cfg = ShapleyConfig(feats, lambda S: table[frozenset(S)])
    phi = analytics.shapley_exact(cfg)
    assert abs(sum(phi.values()) - (table[frozenset(feats)] - table[frozenset()])) <= 1e-9
    oracle = analytics.shapley_permutation(cfg)
    assert all(abs(phi[k] - oracle[k]) <= 1e-9 for k in feats)


def test_shapley_symmetry_and_dummy():
    rng = np.random.default_rng(9)
    base_feats, table = random_game(rng, 4)
    # x0 and x1 are swapped copies of each other; "d" never changes the value
    def value(S):
        core = frozenset(s for s in S if s != "d")
        if ("x0" in core) != ("x1" in core):
            core = core ^ {"x0", "x1"} if "x1" in core else core
        return table[core]
    cfg = ShapleyConfig(base_feats + ["d"], value)
    phi = analytics.shapley_exact(cfg)
    assert abs(phi["x0"] - phi["x1"]) <= 1e-9
    assert abs(phi["d"]) <= 1e-12


def test_shapley_limits_and_failures():
    with pytest.raises(DomainRangeError):
        ShapleyConfig([f"f{i}" for i in range(21)], lambda S: 0.0)
    def bad(S):
        if len(S) == 2:
            raise RuntimeError("model failed")
        return 0.0
    with pytest.raises(AttributionError) as info:
        analytics.shapley_exact(ShapleyConfig(["a", "b", "c"], bad))
    assert len(info.value.subset) == 2


def test_baseline_game():
    model = lambda x: 2 * x["a"] + x["b"] * x["c"]
    v = analytics.baseline_game(model, {"a": 1.0, "b": 2.0, "c": 3.0}, {"a": 0.0, "b": 0.0, "c": 1.0})
    assert v(frozenset()) == 0.0 and v(frozenset({"a", "b", "c"})) == 8.0 and v(frozenset({"b"})) == 2.0


def test_coach_effect_rmse():
    assert analytics.effect_from_rmse(2.86, 0.82).effect == 2.04
    same = {y: 5.0 for y in (2000, 2004, 2008)}
    assert analytics.coach_effect_rmse(same, same, [2004]).effect == 0.0
    preds = {2000: 3.0, 2004: 7.0, 2008: 1.0}
    acts = {2000: 3.0, 2004: 4.0, 2008: 1.0}
    r = analytics.coach_effect_rmse(preds, acts, [2004])
    assert r.rmse_coach == 3.0 and r.rmse_base == 0.0
    with pytest.raises(PartitionError):
        analytics.coach_effect_rmse(preds, acts, [])
    with pytest.raises(PartitionError):
        analytics.coach_effect_rmse(preds, acts, [2000, 2004, 2008])


def test_coach_effect_coefficient():
    assert analytics.coach_effect_coefficient([7] * 6) == 0.0
    assert analytics.coach_effect_coefficient([10, 10, 10, 10, 20, 20, 20, 20]) == 1.0
    assert analytics.coach_effect_coefficient([10, 10, 10, 10, 5]) == 0.125
    with pytest.raises(InsufficientDataError):
        analytics.coach_effect_coefficient([1, 2, 3, 4])
    with pytest.raises(DegenerateError):
        analytics.coach_effect_coefficient([0, 0, 0, 0, 0])


def test_coach_impact_index():
    assert analytics.coach_impact_index(0.0, 0.7) == 0.0
    assert analytics.coach_impact_index(3.0, 0.0) == 3.0
    assert analytics.coach_impact_index(2.0, 1.0) == 4.0
    with pytest.raises(DomainRangeError):
        analytics.coach_impact_index(-1.0, 0.0)


def _ath(sex, year, medal):
    return AthleteRecord(name=f"{sex}{year}{medal}", noc="USA", sex=sex, edition=1, year=year,
                         sport="Judo", event="x", medal=medal)


def test_gender_trend():
    recs = [_ath("M", 2000, "Gold"), _ath("M", 2000, "Silver"), _ath("M", 2000, "Bronze"),
            _ath("F", 2000, "Gold"), _ath("F", 2000, "NoMedal"), _ath("M", 2004, "NoMedal")]
    years, total = analytics.gender_trend(recs)
    assert years[0] == GenderYear(2000, 3, 1) and years[0].ratio == 3.0
    assert years[1] == GenderYear(2004, 0, 0) and years[1].ratio is None
    assert (total.male, total.female) == (3, 1)
    assert GenderYear(2008, 2, 0).ratio == math.inf


def test_gender_totals_on_fixture(fixture_panel):
    years, total = analytics.gender_trend(fixture_panel.athletes)
    assert total.male == sum(g.male for g in years) and total.female == sum(g.female for g in years)
    assert total.male + total.female == sum(a.is_medal for a in fixture_panel.athletes)
