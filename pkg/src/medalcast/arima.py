"""Univariate ARIMA(p, d, q) by conditional sum of squares.

Covers differencing, an augmented Dickey-Fuller check, sample ACF/PACF,
information-criterion order search, CSS fitting and one-step forecasts,
plus the wrapper that forecasts every channel of a team-feature history.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import (
    DegenerateError,
    FitError,
    InsufficientDataError,
    MedalcastError,
    SelectionError,
    StateError,
)

MAX_P = 3
MAX_Q = 3
MAX_D = 2
NM_XTOL = 1e-8
NM_MAXITER = 500
NM_STEP = 0.1
NM_FTOL = 1e-8  # relative objective spread accepted when the iteration cap is hit
ROOT_MARGIN = 1.001
MIN_CHANNEL_ROWS = 8

# Dickey-Fuller critical values, constant-only regression
ADF_CRIT_SMALL = {"1%": -3.75, "5%": -3.00, "10%": -2.63}  # n = 25
ADF_CRIT_ASYMPTOTIC = {"1%": -3.43, "5%": -2.86, "10%": -2.57}


@dataclass(frozen=True)
class ArimaOrder:
    p: int
    d: int
    q: int

    def __post_init__(self):
        if min(self.p, self.d, self.q) < 0:
            raise ValueError("ARIMA orders must be non-negative")


@dataclass
class ArimaModel:
    order: ArimaOrder
    c: float
    phi: np.ndarray
    theta: np.ndarray
    residuals: np.ndarray  # over the differenced series; zeros before `start`
    train_tail: np.ndarray  # last max(p, q) differenced observations
    level_tails: list[float]  # last value at differencing levels 0..d-1
    start: int = 0
    sse: float = 0.0
    iterations: int = 0

    @property
    def n_obs(self) -> int:
        return len(self.residuals) - self.start

    def to_json(self) -> dict:
        m = max(self.order.p, self.order.q)
        return {
            "order": asdict(self.order),
            "c": self.c,
            "phi": self.phi.tolist(),
            "theta": self.theta.tolist(),
            "tail": self.train_tail.tolist(),
            "residual_tail": self.residuals[len(self.residuals) - m :].tolist() if m else [],
            "level_tails": list(self.level_tails),
            "sse": self.sse,
            "n_obs": self.n_obs,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ArimaModel":
        order = ArimaOrder(**doc["order"])
        res = np.array(doc["residual_tail"], dtype=np.float64)
        return cls(
            order=order,
            c=doc["c"],
            phi=np.array(doc["phi"], dtype=np.float64),
            theta=np.array(doc["theta"], dtype=np.float64),
            residuals=res,
            train_tail=np.array(doc["tail"], dtype=np.float64),
            level_tails=list(doc["level_tails"]),
            start=0,
            sse=doc.get("sse", 0.0),
        )


@dataclass
class StationarityReport:
    adf_statistic: float
    critical_values: dict[str, float]
    stationary: bool
    n: int


@dataclass
class AcfPacf:
    acf: np.ndarray  # lags 0..L
    pacf: np.ndarray  # lags 1..L


def difference(series, d: int = 1) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if len(x) <= d:
        raise InsufficientDataError(f"series of length {len(x)} cannot be differenced {d} times")
    for _ in range(d):
        x = np.diff(x)
    return x


def integrate(diffs, heads) -> np.ndarray:
    """Undo :func:`difference` given the first value at each level 0..d-1."""
    x = np.asarray(diffs, dtype=np.float64)
    for h in reversed(list(heads)):
        x = np.concatenate([[h], h + np.cumsum(x)])
    return x


def _level_tails(series, d):
    x = np.asarray(series, dtype=np.float64)
    tails = []
    for _ in range(d):
        tails.append(float(x[-1]))
        x = np.diff(x)
    return tails


def adf_critical_values(n: int) -> dict[str, float]:
    """Critical values interpolated linearly in 1/n between n=25 and n=inf."""
    w = 25.0 / n
    return {k: ADF_CRIT_ASYMPTOTIC[k] + (ADF_CRIT_SMALL[k] - ADF_CRIT_ASYMPTOTIC[k]) * w for k in ADF_CRIT_SMALL}


def adf_test(series) -> StationarityReport:
    """ADF t-statistic with a constant and one lagged difference."""
    y = np.asarray(series, dtype=np.float64)
    n = len(y)
    if n < 10:
        raise InsufficientDataError("ADF test needs at least 10 observations")
    if np.ptp(y) == 0.0:
        raise DegenerateError("constant series: ADF regression is degenerate")
    dy = np.diff(y)
    target = dy[1:]
    X = np.column_stack([np.ones(len(target)), y[1:-1], dy[:-1]])
    beta, _, rank, _ = np.linalg.lstsq(X, target, rcond=None)
    if rank < X.shape[1]:
        raise DegenerateError("ADF regression design is rank deficient")
    resid = target - X @ beta
    dof = len(target) - X.shape[1]
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    se = math.sqrt(cov[1, 1])
    if se == 0.0:
        stat = -math.inf
    else:
        stat = float(beta[1] / se)
    crit = adf_critical_values(n)
    return StationarityReport(adf_statistic=stat, critical_values=crit, stationary=stat < crit["5%"], n=n)


def acf_pacf(series, max_lag: int) -> AcfPacf:
    x = np.asarray(series, dtype=np.float64)
    n = len(x)
    if max_lag >= n / 2:
        raise InsufficientDataError(f"max_lag {max_lag} must be below n/2 = {n / 2}")
    xc = x - x.mean()
    denom = float(xc @ xc)
    if denom == 0.0:
        raise DegenerateError("zero-variance series has no autocorrelation")
    acf = np.array([float(xc[: n - k] @ xc[k:]) / denom for k in range(max_lag + 1)])
    return AcfPacf(acf=acf, pacf=_durbin_levinson(acf, max_lag)[0])


def _durbin_levinson(acf, max_lag):
    """PACF values and the final AR coefficients from an autocorrelation sequence."""
    pacf = np.zeros(max_lag)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        if v <= 0.0:
            break
        a = (acf[k] - float(phi @ acf[k - 1 : 0 : -1])) / v if k > 1 else acf[1]
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        pacf[k - 1] = a
    return pacf, phi


def _initial_guess(x, p, q):
    mean = float(np.mean(x))
    phi = np.zeros(p)
    if p:
        xc = x - mean
        denom = float(xc @ xc)
        if denom > 0.0:
            n = len(x)
            acf = np.array([float(xc[: n - k] @ xc[k:]) / denom for k in range(p + 1)])
            phi = _durbin_levinson(acf, p)[1]
            if len(phi) < p:
                phi = np.concatenate([phi, np.zeros(p - len(phi))])
    c = mean * (1.0 - phi.sum())
    return np.concatenate([[c], phi, np.zeros(q)])


def _explosive(phi) -> bool:
    if len(phi) == 0 or not np.any(phi):
        return False
    roots = np.roots(np.concatenate([-phi[::-1], [1.0]]))
    return bool(np.any(np.abs(roots) <= ROOT_MARGIN))


def fit_css(series, order: ArimaOrder, start: int | None = None,
            maxiter: int = NM_MAXITER, xtol: float = NM_XTOL) -> ArimaModel:
    """Fit (c, phi, theta) by Nelder-Mead on the conditional sum of squares.

    The first ``start`` differenced values (default ``p``) only condition the
    recursion; pre-sample errors are zero. The optimiser runs on the series
    scaled to unit standard deviation so ``xtol`` is scale free. It stops
    when the simplex spread drops below ``xtol`` or after ``maxiter``
    iterations; stopping at the cap while the objective is still moving is
    a :class:`FitError`.
    """
    p, d, q = order.p, order.d, order.q
    x = difference(series, d)
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be at least p")
    if len(x) - start <= p + q + 1:
        raise InsufficientDataError(f"{len(x) - start} usable observations for ARIMA{(p, d, q)}")

    scale = float(np.std(x))
    if scale == 0.0 or not math.isfinite(scale):
        scale = 1.0
    xs = x / scale
    x0 = _initial_guess(xs, p, q)
    params, best, iterations, converged, fspread = kernels.css_nelder_mead(
        xs, p, q, start, x0, NM_STEP, xtol, maxiter
    )
    params = np.asarray(params, dtype=np.float64)
    c, phi, theta = params[0] * scale, params[1 : 1 + p], params[1 + p :]
    # at the cap, a flat simplex (ridge of equal SSE) still counts as a fit
    settled = math.isfinite(best) and fspread <= NM_FTOL * max(best, 1e-300)
    if not (converged or settled):
        raise FitError(f"ARIMA{(p, d, q)} CSS did not converge in {maxiter} iterations", last_iterate=params)
    if _explosive(phi):
        raise FitError(f"ARIMA{(p, d, q)} fit is explosive (AR root inside {ROOT_MARGIN})", last_iterate=params)

    resid = np.asarray(kernels.css_residuals(x, c, phi, theta, start))
    sse = float(resid[start:] @ resid[start:])
    m = max(p, q)
    return ArimaModel(
        order=order,
        c=float(c),
        phi=phi.copy(),
        theta=theta.copy(),
        residuals=resid,
        train_tail=x[len(x) - m :].copy() if m else np.zeros(0),
        level_tails=_level_tails(series, d),
        start=start,
        sse=sse,
        iterations=int(iterations),
    )


def information_criterion(sse: float, n: int, k: int, criterion: str = "bic") -> float:
    if sse <= 0.0:
        return -math.inf
    penalty = 2.0 * k if criterion == "aic" else k * math.log(n)
    return n * math.log(sse / n) + penalty


@dataclass
class OrderSearch:
    order: ArimaOrder
    model: ArimaModel
    scores: dict[tuple[int, int], float] = field(default_factory=dict)
    failures: dict[tuple[int, int], str] = field(default_factory=dict)


def search_order(series, d: int = 1, max_p: int = MAX_P, max_q: int = MAX_Q,
                 criterion: str = "bic") -> OrderSearch:
    """Grid search over p, q; all candidates share the conditioning window."""
    if criterion not in ("aic", "bic"):
        raise ValueError(f"unknown criterion {criterion!r}")
    best = None
    scores, failures, models = {}, {}, {}
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            try:
                m = fit_css(series, ArimaOrder(p, d, q), start=max_p)
            except MedalcastError as exc:
                failures[(p, q)] = str(exc)
                continue
            score = information_criterion(m.sse, m.n_obs, p + q + 1, criterion)
            scores[(p, q)] = score
            models[(p, q)] = m
            key = (score, p + q, p)
            if best is None or key < best[0]:
                best = (key, (p, q))
    if best is None:
        raise SelectionError("no candidate ARIMA order could be fitted", failures)
    p, q = best[1]
    return OrderSearch(order=ArimaOrder(p, d, q), model=models[(p, q)], scores=scores, failures=failures)


def select_order(series, d: int = 1, criterion: str = "bic") -> ArimaOrder:
    """Order minimising the criterion; ties go to smaller p+q, then smaller p."""
    return search_order(series, d, criterion=criterion).order


def forecast_one(model: ArimaModel) -> float:
    """One-step forecast on the original scale."""
    p, q = model.order.p, model.order.q
    m = max(p, q)
    if len(model.train_tail) < m or len(model.residuals) < q:
        raise StateError("model has no stored tail to forecast from")
    x = model.train_tail
    e = model.residuals
    value = model.c
    for i in range(1, p + 1):
        value += model.phi[i - 1] * x[len(x) - i]
    for j in range(1, q + 1):
        value += model.theta[j - 1] * e[len(e) - j]
    for level in reversed(model.level_tails):
        value = level + value
    return float(value)


def fit_channelwise(history, d: int = 1, criterion: str = "bic", min_rows: int = MIN_CHANNEL_ROWS,
                    shape=(10, 5)):
    """Forecast every column of a (time x channels) history one step ahead.

    Channels that cannot be fitted carry their last value forward. Returns
    ``(forecast reshaped to shape, diagnostics)``.
    """
    H = np.asarray(history, dtype=np.float64)
    T, n_channels = H.shape
    out = np.empty(n_channels)
    diagnostics = []
    for j in range(n_channels):
        series = H[:, j]
        info = {"channel": j, "p": None, "d": d, "q": None, "score": None, "fallback": False, "reason": ""}
        try:
            if T < min_rows:
                raise InsufficientDataError(f"{T} rows < {min_rows}")
            found = search_order(series, d, criterion=criterion)
            out[j] = forecast_one(found.model)
            if not math.isfinite(out[j]):
                raise FitError("non-finite forecast")
            info.update(p=found.order.p, q=found.order.q, score=found.scores[(found.order.p, found.order.q)])
        except (MedalcastError, FloatingPointError, np.linalg.LinAlgError) as exc:
            out[j] = series[-1]
            info.update(fallback=True, reason=str(exc))
        diagnostics.append(info)
    return out.reshape(shape), diagnostics


def model_json(model: ArimaModel) -> str:
    return json.dumps(model.to_json())
