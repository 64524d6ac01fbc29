"""Network-autoregressive forecasting over county commuting networks.

Build weighted geographic networks from origin-destination flow data, fit and
simulate network autoregressive processes on them, and evaluate one-step
forecasts against the naive baseline under a rolling-horizon design.
"""

from .graph import (
    EARTH_RADIUS_KM,
    CountyNetwork,
    NetworkError,
    NetworkStats,
    NodeAttrs,
    StageNeighborhood,
    connection_weights,
    degree_histogram,
    extract_state_subnetwork,
    haversine_km,
    neighbor_set,
    network_stats,
    reweight,
    stage_neighbors,
    triangular_lattice,
)
from .series import FREQUENCIES, NetworkTimeSeries, SeriesError
from .model import (
    GnarCoefficients,
    GnarFit,
    GnarOrder,
    GridCell,
    ModelError,
    build_design,
    fit,
    forecast,
    grid_order,
    model_selection,
    preset,
    simulate,
)
from .evaluate import (
    EvaluationError,
    ForecastEvaluation,
    MapeBand,
    MetricUndefinedError,
    PeriodScore,
    SummaryStats,
    mape,
    mape_band,
    mase,
    naive_forecast,
    predictive_power,
    rolling_horizon,
)
from .ingest import (
    CaseTable,
    DataQualityReport,
    FlowRecord,
    IngestError,
    Transform,
    aggregate_weekly,
    build_network_from_flows,
    invert,
    normalize_fips,
    parse_cases,
    parse_flows,
    to_panel,
    transform,
)

__all__ = [
    "EARTH_RADIUS_KM",
    "CountyNetwork",
    "NetworkError",
    "NetworkStats",
    "NodeAttrs",
    "StageNeighborhood",
    "connection_weights",
    "degree_histogram",
    "extract_state_subnetwork",
    "haversine_km",
    "neighbor_set",
    "network_stats",
    "reweight",
    "stage_neighbors",
    "triangular_lattice",
    "FREQUENCIES",
    "NetworkTimeSeries",
    "SeriesError",
    "GnarCoefficients",
    "GnarFit",
    "GnarOrder",
    "GridCell",
    "ModelError",
    "build_design",
    "fit",
    "forecast",
    "grid_order",
    "model_selection",
    "preset",
    "simulate",
    "EvaluationError",
    "ForecastEvaluation",
    "MapeBand",
    "MetricUndefinedError",
    "PeriodScore",
    "SummaryStats",
    "mape",
    "mape_band",
    "mase",
    "naive_forecast",
    "predictive_power",
    "rolling_horizon",
    "CaseTable",
    "DataQualityReport",
    "FlowRecord",
    "IngestError",
    "Transform",
    "aggregate_weekly",
    "build_network_from_flows",
    "invert",
    "normalize_fips",
    "parse_cases",
    "parse_flows",
    "to_panel",
    "transform",
]
