"""Forecast scoring: percentage and scaled errors, rolling-horizon evaluation.

Two per-term error measures are used throughout. The percentage error of a
term is |(Y - F) / Y|; terms with Y = 0 are excluded and counted. The scaled
error of a term is |(Y_t - F_t) / (Y_t - Y_{t-1})|, i.e. each term is scaled
by that period's one-step naive error; terms with a flat step
(Y_t = Y_{t-1}) are excluded and counted. Under this scaling the naive
forecast scores exactly 1 on every included term, which is the baseline a
model must beat to claim predictive power.

Both exclusion masks depend only on the actual series, so competing models
evaluated on the same periods automatically share an inclusion mask.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass

import numpy as np

from .graph import CountyNetwork
from .model import GnarOrder, fit, forecast
from .series import NetworkTimeSeries


class MetricUndefinedError(ValueError):
    """Every term of a metric was excluded; the value does not exist."""


class EvaluationError(ValueError):
    """Evaluation could not be carried out."""


# -- scalar metrics -----------------------------------------------------------


def mape(actual, forecast_values) -> tuple[float, int]:
    """Mean absolute percentage error and the count of excluded zero terms."""
    y = np.asarray(actual, dtype=np.float64)
    f = np.asarray(forecast_values, dtype=np.float64)
    if y.shape != f.shape or y.size == 0:
        raise EvaluationError(f"need equal-length nonempty vectors, got {y.shape} and {f.shape}")
    keep = y != 0.0
    excluded = int(np.sum(~keep))
    if excluded == y.size:
        raise MetricUndefinedError("every term has a zero actual; percentage error undefined")
    with np.errstate(over="ignore"):  # near-zero actuals legitimately blow up terms
        value = float(np.mean(np.abs((y[keep] - f[keep]) / y[keep])))
    return value, excluded


def mase(actual, forecast_values, previous, conventional: bool = False) -> tuple[float, int]:
    """Mean absolute scaled error and the count of excluded flat-step terms.

    The default form averages per-term ratios |Y_t - F_t| / |Y_t - Y_{t-1}|.
    ``conventional`` switches to the ratio-of-means variant
    mean|Y - F| / mean|Y_t - Y_{t-1}| (flat steps still excluded from the
    denominator mean), provided for comparison.
    """
    y = np.asarray(actual, dtype=np.float64)
    f = np.asarray(forecast_values, dtype=np.float64)
    prev = np.asarray(previous, dtype=np.float64)
    if not (y.shape == f.shape == prev.shape) or y.size == 0:
        raise EvaluationError(
            f"need equal-length nonempty vectors, got {y.shape}, {f.shape}, {prev.shape}")
    step = y - prev
    keep = step != 0.0
    excluded = int(np.sum(~keep))
    if excluded == y.size:
        raise MetricUndefinedError("every term has a flat step; scaled error undefined")
    with np.errstate(over="ignore"):  # near-flat steps legitimately blow up terms
        if conventional:
            value = float(np.mean(np.abs(y - f)) / np.mean(np.abs(step[keep])))
        else:
            value = float(np.mean(np.abs((y[keep] - f[keep]) / step[keep])))
    return value, excluded


def naive_forecast(series: NetworkTimeSeries) -> NetworkTimeSeries:
    """Forecast every period as the previous period's actual value.

    Output row t corresponds to input row t+1 (t = 1..T-1 of the input),
    so it aligns with the actuals it predicts.
    """
    if series.n_steps < 2:
        raise EvaluationError(f"need at least 2 rows, got {series.n_steps}")
    return series.with_values(series.values[:-1],
                              start_date=series.date_at(1))


# -- interpretation bands -----------------------------------------------------


@dataclass(frozen=True)
class MapeBand:
    """Accuracy interpretation band for a percentage error value."""

    label: str
    lower_pct: float
    upper_pct: float | None  # None = unbounded


MAPE_BANDS = (
    MapeBand("highly_accurate", 0.0, 10.0),
    MapeBand("good", 10.0, 20.0),
    MapeBand("reasonable", 20.0, 50.0),
    MapeBand("inaccurate", 50.0, None),
)


def mape_band(value: float) -> MapeBand:
    """Interpretation band for a percentage error expressed as a fraction.

    Boundary values land in the lower-error band: exactly 10% is still
    highly accurate.
    """
    if value < 0:
        raise EvaluationError(f"percentage error must be >= 0, got {value}")
    pct = value * 100.0
    for band in MAPE_BANDS:
        if band.upper_pct is None or pct <= band.upper_pct:
            return band
    raise AssertionError("unreachable")


# -- rolling horizon ----------------------------------------------------------


@dataclass(frozen=True)
class PeriodScore:
    """Cross-sectional scores at one test period."""

    period: int        # 1-based position within the test window
    week_index: int    # 1-based row index within the full series
    mape: float
    mase: float
    excluded_mape_terms: int
    excluded_mase_terms: int


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    median: float
    variance: float


@dataclass(frozen=True)
class ForecastEvaluation:
    """Per-period and summary scores for one model on one panel."""

    per_period: tuple[PeriodScore, ...]
    mape_summary: SummaryStats
    mase_summary: SummaryStats

    def to_json_dict(self) -> dict:
        return {
            "per_period": [
                {
                    "period": r.period,
                    "week_index": r.week_index,
                    "mape": r.mape,
                    "mase": r.mase,
                    "excluded_mape_terms": r.excluded_mape_terms,
                    "excluded_mase_terms": r.excluded_mase_terms,
                }
                for r in self.per_period
            ],
            "summary": {
                "mape": vars(self.mape_summary).copy(),
                "mase": vars(self.mase_summary).copy(),
            },
        }


def _summary(values: list[float]) -> SummaryStats:
    # sample variance (N-1); a single period has no spread
    variance = statistics.variance(values) if len(values) > 1 else 0.0
    return SummaryStats(
        mean=float(np.mean(values)),
        median=float(np.median(values)),
        variance=float(variance),
    )


def predictive_power(evaluation: ForecastEvaluation) -> bool:
    """True when the summary scaled error strictly beats the naive baseline."""
    return evaluation.mase_summary.mean < 1.0


def rolling_horizon(series: NetworkTimeSeries, net: CountyNetwork,
                    order: GnarOrder | None, test_periods: int,
                    eval_nodes: np.ndarray | None = None,
                    conventional_mase: bool = False,
                    cumulative: bool = False,
                    transform=None) -> ForecastEvaluation:
    """Refit-and-score the final ``test_periods`` rows one step at a time.

    For each test row the model is refitted on all strictly earlier rows and
    its one-step forecast is scored cross-sectionally over the evaluated
    nodes. ``order=None`` evaluates the naive baseline (forecast = previous
    actual). ``eval_nodes`` restricts scoring to a boolean node mask, e.g.
    within-state nodes when boundary nodes only feed regressors.

    ``cumulative`` makes each period's scores pool all terms from the start
    of the test window through that period instead of that period alone.
    ``transform``, when given, is fitted to each training window; the model
    is estimated on the transformed scale and its forecast inverted back
    before scoring, so scores stay comparable with the naive baseline.
    """
    if test_periods < 1:
        raise EvaluationError(f"test_periods must be >= 1, got {test_periods}")
    T = series.n_steps
    p = order.p if order is not None else 1
    if T <= p + test_periods:
        raise EvaluationError(
            f"panel has T={T} rows; need more than p + test_periods = {p + test_periods}")
    if eval_nodes is None:
        mask = np.ones(series.n_nodes, dtype=bool)
    else:
        mask = np.asarray(eval_nodes, dtype=bool)
        if mask.shape != (series.n_nodes,):
            raise EvaluationError(f"eval_nodes must be a mask of length {series.n_nodes}")
        if not mask.any():
            raise EvaluationError("eval_nodes excludes every node")

    records = []
    pooled_actual: list[np.ndarray] = []
    pooled_forecast: list[np.ndarray] = []
    pooled_previous: list[np.ndarray] = []
    first = T - test_periods
    for k, t_star in enumerate(range(first, T), start=1):
        try:
            if order is None:
                predicted = series.values[t_star - 1]
            else:
                train = series.with_values(series.values[:t_star])
                if transform is not None:
                    working = transform.refit(train)
                    fitted = fit(working, net, order)
                    pred_t = forecast(fitted, working, net, h=1)
                    predicted = transform.invert(pred_t).values[0]
                else:
                    fitted = fit(train, net, order)
                    predicted = forecast(fitted, train, net, h=1).values[0]

            actual = series.values[t_star][mask]
            previous = series.values[t_star - 1][mask]
            predicted = np.asarray(predicted)[mask]
            pooled_actual.append(actual)
            pooled_forecast.append(predicted)
            pooled_previous.append(previous)
            if cumulative:
                actual = np.concatenate(pooled_actual)
                predicted = np.concatenate(pooled_forecast)
                previous = np.concatenate(pooled_previous)
            mape_value, mape_excluded = mape(actual, predicted)
            mase_value, mase_excluded = mase(actual, predicted, previous,
                                             conventional=conventional_mase)
        except (ValueError, np.linalg.LinAlgError) as exc:
            raise EvaluationError(f"test period {k} (row {t_star + 1}): {exc}") from exc
        records.append(PeriodScore(
            period=k,
            week_index=t_star + 1,
            mape=mape_value,
            mase=mase_value,
            excluded_mape_terms=mape_excluded,
            excluded_mase_terms=mase_excluded,
        ))

    return ForecastEvaluation(
        per_period=tuple(records),
        mape_summary=_summary([r.mape for r in records]),
        mase_summary=_summary([r.mase for r in records]),
    )


# -- report shaping -----------------------------------------------------------

REPORT_CSV_HEADER = "period,week_index,metric,model,value,excluded_terms"


def report_rows(model_label: str, evaluation: ForecastEvaluation) -> list[str]:
    """Long-format CSV rows (no header) for one model's evaluation."""
    rows = []
    for r in evaluation.per_period:
        rows.append(f"{r.period},{r.week_index},mape,{model_label},"
                    f"{r.mape!r},{r.excluded_mape_terms}")
        rows.append(f"{r.period},{r.week_index},mase,{model_label},"
                    f"{r.mase!r},{r.excluded_mase_terms}")
    return rows


def summary_dict(evaluation: ForecastEvaluation) -> dict:
    """Summary block: both metrics with mean, median, variance."""
    return {
        "mase": vars(evaluation.mase_summary).copy(),
        "mape": vars(evaluation.mape_summary).copy(),
    }
