"""Network autoregression: design construction, fitting, simulation, forecasting.

The process of order ``(p, [s])`` expresses each node's value at time t as a
linear combination of its own previous p values and, for each lag j, weighted
sums of its stage-1..stage-s_j neighbors' lagged values:

    x[i, t] = sum_j ( alpha[i, j] * x[i, t-j]
                      + sum_r beta[j, r] * sum_q w[i, q] * x[q, t-j] )

where q ranges over the stage-r neighbors of i and w are the normalized
connection weights. Alphas may be node-specific or shared globally; betas are
always shared. Estimation is ordinary least squares on the stacked per-node,
per-time system, solved by a pivoted orthogonal decomposition so collinear
columns are dropped deterministically instead of blowing up.
"""

from __future__ import annotations

import datetime
import json
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .graph import CountyNetwork, stage_weight_matrix
from .series import NetworkTimeSeries

ALPHA_MODES = ("per_node", "global")


class ModelError(ValueError):
    """Invalid model specification or unusable design."""


@dataclass(frozen=True)
class GnarOrder:
    """Model hyperparameters: max lag p and per-lag neighbor stage depths s.

    ``alpha_mode`` chooses node-specific or globally shared self-lag
    coefficients; ``alpha_zero`` pins all self-lag coefficients to zero,
    leaving a pure neighbor model.
    """

    p: int
    s: tuple[int, ...]
    alpha_mode: str = "per_node"
    alpha_zero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(v) for v in self.s))
        if self.p < 0:
            raise ModelError(f"p must be >= 0, got {self.p}")
        if len(self.s) != self.p:
            raise ModelError(f"s must have length p={self.p}, got {len(self.s)}")
        if any(v < 0 for v in self.s):
            raise ModelError(f"neighbor stages must be >= 0, got {self.s}")
        if self.alpha_mode not in ALPHA_MODES:
            raise ModelError(f"alpha_mode must be one of {ALPHA_MODES}, got {self.alpha_mode!r}")
        if self.alpha_zero and not any(v >= 1 for v in self.s):
            raise ModelError("alpha_zero with no neighbor stages leaves an empty model")

    @property
    def max_stage(self) -> int:
        return max(self.s) if self.s else 0

    def n_columns(self, n_nodes: int) -> int:
        """Number of design columns for a network of ``n_nodes`` nodes."""
        if self.alpha_zero:
            alpha_cols = 0
        elif self.alpha_mode == "per_node":
            alpha_cols = n_nodes * self.p
        else:
            alpha_cols = self.p
        return alpha_cols + sum(self.s)


@dataclass(frozen=True)
class GnarCoefficients:
    """Estimated (or chosen) coefficients matching a :class:`GnarOrder`.

    ``alpha`` has shape (p,) in global mode or (n, p) in per-node mode;
    ``beta`` holds one length-s_j array per lag j.
    """

    alpha: np.ndarray
    beta: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=np.float64))
        object.__setattr__(self, "beta", tuple(np.asarray(b, dtype=np.float64) for b in self.beta))

    def validate(self, order: GnarOrder, n_nodes: int) -> None:
        if order.alpha_mode == "global":
            if self.alpha.shape != (order.p,):
                raise ModelError(f"global alpha must have shape ({order.p},), got {self.alpha.shape}")
        else:
            if self.alpha.shape != (n_nodes, order.p):
                raise ModelError(
                    f"per-node alpha must have shape ({n_nodes}, {order.p}), got {self.alpha.shape}")
        if order.alpha_zero and np.any(self.alpha != 0.0):
            raise ModelError("order pins self-lag coefficients to zero but alpha is nonzero")
        if len(self.beta) != order.p:
            raise ModelError(f"beta must have one entry per lag, got {len(self.beta)} for p={order.p}")
        for j, (b, sj) in enumerate(zip(self.beta, order.s), start=1):
            if b.shape != (sj,):
                raise ModelError(f"beta at lag {j} must have length {sj}, got {b.shape}")


@dataclass(frozen=True)
class ColumnSpec:
    """Describes one design-matrix column."""

    kind: str                 # "alpha" | "beta"
    lag: int
    node: str | None = None   # per-node alpha columns only
    stage: int | None = None  # beta columns only

    def __str__(self):
        if self.kind == "alpha":
            if self.node is None:
                return f"alpha[lag={self.lag}]"
            return f"alpha[node={self.node},lag={self.lag}]"
        return f"beta[lag={self.lag},stage={self.stage}]"


@dataclass(frozen=True)
class GnarFit:
    """A fitted model: coefficients plus residual diagnostics.

    ``node_order_hash`` records the node ordering of the network the fit was
    computed against, so a fit cannot silently be applied to a misaligned
    panel.
    """

    order: GnarOrder
    coefficients: GnarCoefficients
    residual_matrix: np.ndarray | None
    sigma2_hat: float
    design_columns: tuple[ColumnSpec, ...]
    dropped_columns: tuple[ColumnSpec, ...]
    node_order_hash: str

    def to_json_dict(self) -> dict:
        return {
            "order": {
                "p": self.order.p,
                "s": list(self.order.s),
                "alpha_mode": self.order.alpha_mode,
                "alpha_zero": self.order.alpha_zero,
            },
            "alpha": self.coefficients.alpha.tolist(),
            "beta": [b.tolist() for b in self.coefficients.beta],
            "sigma2_hat": self.sigma2_hat,
            "dropped_columns": [str(c) for c in self.dropped_columns],
            "node_order_hash": self.node_order_hash,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "GnarFit":
        order = GnarOrder(
            p=doc["order"]["p"],
            s=tuple(doc["order"]["s"]),
            alpha_mode=doc["order"]["alpha_mode"],
            alpha_zero=doc["order"]["alpha_zero"],
        )
        coef = GnarCoefficients(
            alpha=np.array(doc["alpha"], dtype=np.float64),
            beta=tuple(np.array(b, dtype=np.float64) for b in doc["beta"]),
        )
        return cls(
            order=order,
            coefficients=coef,
            residual_matrix=None,
            sigma2_hat=float(doc["sigma2_hat"]),
            design_columns=(),
            dropped_columns=(),
            node_order_hash=doc["node_order_hash"],
        )


def preset(model_id: int) -> GnarOrder:
    """The three standard model configurations.

    Model 1 pairs one self lag with stage-1 neighbor effects. Model 2 keeps
    only the neighbor term by pinning the self-lag coefficients to zero
    (realizing the literal "no self lag" configuration without erasing the
    lag-1 neighbor term). Model 3 is the customary default of two lags with
    stage-1 neighbors at each.
    """
    if model_id == 1:
        return GnarOrder(p=1, s=(1,))
    if model_id == 2:
        return GnarOrder(p=1, s=(1,), alpha_zero=True)
    if model_id == 3:
        return GnarOrder(p=2, s=(1, 1))
    raise ModelError(f"unknown model preset: {model_id!r}")


# -- design construction ------------------------------------------------------


def _check_alignment(series: NetworkTimeSeries, net: CountyNetwork) -> None:
    if series.n_nodes != net.n_nodes:
        raise ModelError(
            f"panel has {series.n_nodes} columns but the network has {net.n_nodes} nodes")


def _column_specs(order: GnarOrder, net: CountyNetwork) -> list[ColumnSpec]:
    cols: list[ColumnSpec] = []
    if not order.alpha_zero:
        for j in range(1, order.p + 1):
            if order.alpha_mode == "per_node":
                cols.extend(ColumnSpec("alpha", j, node=n) for n in net.nodes)
            else:
                cols.append(ColumnSpec("alpha", j))
    for j, sj in enumerate(order.s, start=1):
        cols.extend(ColumnSpec("beta", j, stage=r) for r in range(1, sj + 1))
    return cols


def _neighbor_sums(series_values: np.ndarray, net: CountyNetwork, max_stage: int):
    """Z[r] with Z[r][t, i] = weighted sum of node i's stage-r neighbors at t."""
    return {r: np.asarray((stage_weight_matrix(net, r) @ series_values.T).T)
            for r in range(1, max_stage + 1)}


def build_design(series: NetworkTimeSeries, net: CountyNetwork, order: GnarOrder):
    """Stack the regression system for a panel over a network.

    Returns ``(y, X, columns)``: one response entry per (time, node) pair for
    t = p+1..T in time-major order, the matching regressor matrix, and the
    descriptors of its columns. Nodes with an empty stage-r set contribute
    zero to the corresponding neighbor column.
    """
    _check_alignment(series, net)
    T, n = series.values.shape
    p = order.p
    if T <= p:
        raise ModelError(f"panel has T={T} rows; need more than p={p}")

    specs = _column_specs(order, net)
    n_rows = (T - p) * n
    X = np.zeros((T - p, n, len(specs)))
    values = series.values
    col = 0
    if not order.alpha_zero:
        for j in range(1, p + 1):
            lagged = values[p - j:T - j, :]
            if order.alpha_mode == "per_node":
                for k in range(n):
                    X[:, k, col + k] = lagged[:, k]
                col += n
            else:
                X[:, :, col] = lagged
                col += 1
    if order.max_stage:
        z = _neighbor_sums(values, net, order.max_stage)
        for j, sj in enumerate(order.s, start=1):
            for r in range(1, sj + 1):
                X[:, :, col] = z[r][p - j:T - j, :]
                col += 1

    y = values[p:, :].reshape(n_rows)
    return y, X.reshape(n_rows, len(specs)), specs


# -- estimation ---------------------------------------------------------------


def _pivoted_lstsq(X: np.ndarray, y: np.ndarray):
    """Least squares with rank detection via column-pivoted QR.

    Dependent columns are dropped (coefficient forced to zero) and reported,
    so the result is deterministic even when the design is singular.
    """
    n_rows, n_cols = X.shape
    q, r, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        rank = 0
    else:
        tol = max(n_rows, n_cols) * np.finfo(np.float64).eps * diag[0]
        rank = int(np.sum(diag > tol))
    coef = np.zeros(n_cols)
    if rank > 0:
        rhs = q.T @ y
        kept = scipy.linalg.solve_triangular(r[:rank, :rank], rhs[:rank])
        coef[piv[:rank]] = kept
    dropped = sorted(int(k) for k in piv[rank:])
    return coef, rank, dropped


def fit(series: NetworkTimeSeries, net: CountyNetwork, order: GnarOrder) -> GnarFit:
    """Estimate coefficients by OLS on the stacked system.

    Per-node fits fall back to a shared (global) alpha with a warning when
    the stacked system has fewer rows than columns, which happens for short
    panels over many nodes.
    """
    _check_alignment(series, net)
    T, n = series.values.shape
    if order.n_columns(n) == 0:
        raise ModelError("model has no regressor columns (empty design)")
    if (order.alpha_mode == "per_node" and not order.alpha_zero
            and (T - order.p) * n < order.n_columns(n)):
        warnings.warn(
            f"stacked system has {(T - order.p) * n} rows for {order.n_columns(n)} "
            "columns; falling back to a global alpha", stacklevel=2)
        order = replace(order, alpha_mode="global")

    y, X, specs = build_design(series, net, order)
    coef, rank, dropped_idx = _pivoted_lstsq(X, y)
    if dropped_idx:
        warnings.warn(
            f"design is rank deficient; dropped columns: "
            f"{[str(specs[k]) for k in dropped_idx]}", stacklevel=2)

    residuals = y - X @ coef
    rss = float(residuals @ residuals)
    sigma2 = rss / max(len(y) - rank, 1)

    p = order.p
    if order.alpha_zero:
        alpha = (np.zeros((n, p)) if order.alpha_mode == "per_node" else np.zeros(p))
        beta_flat = coef
    elif order.alpha_mode == "per_node":
        alpha = np.empty((n, p))
        for j in range(p):
            alpha[:, j] = coef[j * n:(j + 1) * n]
        beta_flat = coef[n * p:]
    else:
        alpha = coef[:p].copy()
        beta_flat = coef[p:]
    beta = []
    pos = 0
    for sj in order.s:
        beta.append(beta_flat[pos:pos + sj].copy())
        pos += sj

    return GnarFit(
        order=order,
        coefficients=GnarCoefficients(alpha=alpha, beta=tuple(beta)),
        residual_matrix=residuals.reshape(T - p, n),
        sigma2_hat=sigma2,
        design_columns=tuple(specs),
        dropped_columns=tuple(specs[k] for k in dropped_idx),
        node_order_hash=net.node_order_hash,
    )


# -- generation and prediction ------------------------------------------------


def _one_step(values: np.ndarray, t: int, net: CountyNetwork, order: GnarOrder,
              coef: GnarCoefficients, z_matrices) -> np.ndarray:
    """Model-implied value at row ``t`` given rows before it."""
    n = values.shape[1]
    out = np.zeros(n)
    for j in range(1, order.p + 1):
        lag = values[t - j, :]
        if order.alpha_mode == "per_node":
            out += coef.alpha[:, j - 1] * lag
        else:
            out += coef.alpha[j - 1] * lag
        for r in range(1, order.s[j - 1] + 1):
            out += coef.beta[j - 1][r - 1] * np.asarray(z_matrices[r] @ lag)
    return out


def simulate(net: CountyNetwork, order: GnarOrder, coef: GnarCoefficients,
             T: int, sigma: float, seed: int, burn_in: int = 50,
             init: np.ndarray | None = None,
             frequency: str = "weekly",
             start_date: datetime.date = datetime.date(2020, 1, 1)) -> NetworkTimeSeries:
    """Generate a panel from the process with i.i.d. Gaussian innovations.

    The first p rows default to draws from N(0, sigma^2) (exact zeros when
    sigma is 0); pass ``init`` to start from explicit values instead, e.g.
    for noiseless runs that should carry signal. ``burn_in`` extra steps are
    simulated and discarded before the returned window. Output is
    reproducible for a fixed seed. Stationarity is not checked: explosive
    coefficient sets simulate exactly as specified.
    """
    coef.validate(order, net.n_nodes)
    if T < 1:
        raise ModelError(f"T must be >= 1, got {T}")
    if sigma < 0:
        raise ModelError(f"sigma must be >= 0, got {sigma}")
    if burn_in < 0:
        raise ModelError(f"burn_in must be >= 0, got {burn_in}")
    n = net.n_nodes
    p = order.p
    total = p + burn_in + T
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, sigma, size=(total, n)) if sigma > 0 else np.zeros((total, n))

    values = np.zeros((total, n))
    if init is not None:
        init = np.asarray(init, dtype=np.float64)
        if init.shape != (p, n):
            raise ModelError(f"init must have shape ({p}, {n}), got {init.shape}")
        values[:p] = init
    else:
        values[:p] = noise[:p]

    z = {r: stage_weight_matrix(net, r) for r in range(1, order.max_stage + 1)}
    for t in range(p, total):
        values[t] = _one_step(values, t, net, order, coef, z) + noise[t]

    return NetworkTimeSeries(values=values[p + burn_in:], frequency=frequency,
                             start_date=start_date)


def forecast(fit_result: GnarFit, history: NetworkTimeSeries, net: CountyNetwork,
             h: int) -> NetworkTimeSeries:
    """Iterated forecasts h steps past the end of ``history``.

    Step 1 uses observed lags; later steps substitute earlier forecasts.
    Innovations enter at their mean, zero.
    """
    if h < 1:
        raise ModelError(f"h must be >= 1, got {h}")
    _check_alignment(history, net)
    if net.node_order_hash != fit_result.node_order_hash:
        raise ModelError("network node ordering does not match the ordering the fit was computed on")
    order = fit_result.order
    p = order.p
    if history.n_steps < p:
        raise ModelError(f"history has {history.n_steps} rows; need at least p={p}")

    n = net.n_nodes
    window = np.zeros((p + h, n))
    if p:
        window[:p] = history.values[-p:]
    z = {r: stage_weight_matrix(net, r) for r in range(1, order.max_stage + 1)}
    for k in range(h):
        window[p + k] = _one_step(window, p + k, net, order, fit_result.coefficients, z)

    return NetworkTimeSeries(
        values=window[p:],
        frequency=history.frequency,
        start_date=history.date_at(history.n_steps),
    )


# -- model selection ----------------------------------------------------------


@dataclass(frozen=True)
class GridCell:
    """One scored cell of the order-selection grid."""

    alpha_order: int
    beta_order: int
    order: GnarOrder | None
    score: float | None
    note: str = ""

    @property
    def available(self) -> bool:
        return self.score is not None


def grid_order(alpha_order: int, beta_order: int) -> GnarOrder:
    """Map a grid cell (alphaOrder, betaOrder) to a model order.

    A positive alphaOrder a becomes p = a with the beta stage depth repeated
    at every lag. alphaOrder 0 with a positive betaOrder keeps the lag-1
    neighbor term and pins the self-lag coefficients to zero. (0, 0) has no
    terms at all and is rejected.
    """
    if alpha_order < 0 or beta_order < 0:
        raise ModelError("grid orders must be >= 0")
    if alpha_order == 0 and beta_order == 0:
        raise ModelError("cell (0, 0) specifies an empty model")
    if alpha_order == 0:
        return GnarOrder(p=1, s=(beta_order,), alpha_zero=True)
    return GnarOrder(p=alpha_order, s=(beta_order,) * alpha_order)


def _holdout_mase(series: NetworkTimeSeries, net: CountyNetwork, order: GnarOrder) -> float:
    """Pooled one-step scaled error over the final fifth of the panel."""
    T = series.n_steps
    holdout = max(1, T // 5)
    train_T = T - holdout
    if train_T <= order.p:
        raise ModelError(f"series too short: {T} rows for p={order.p} with {holdout} holdout steps")
    train = series.with_values(series.values[:train_T])
    fitted = fit(train, net, order)

    num = []
    den = []
    for t in range(train_T, T):
        hist = series.with_values(series.values[:t])
        pred = forecast(fitted, hist, net, h=1).values[0]
        actual = series.values[t]
        prev = series.values[t - 1]
        num.append(np.abs(actual - pred))
        den.append(np.abs(actual - prev))
    num = np.concatenate(num)
    den = np.concatenate(den)
    keep = den > 0
    if not np.any(keep):
        raise ModelError("every holdout term has a flat step; scaled error undefined")
    return float(np.mean(num[keep] / den[keep]))


def _bic(series: NetworkTimeSeries, net: CountyNetwork, order: GnarOrder) -> float:
    fitted = fit(series, net, order)
    resid = fitted.residual_matrix.reshape(-1)
    n_obs = resid.size
    rss = max(float(resid @ resid), 1e-300)
    k = len(fitted.design_columns) - len(fitted.dropped_columns)
    return n_obs * np.log(rss / n_obs) + k * np.log(n_obs)


def model_selection(series: NetworkTimeSeries, net: CountyNetwork, grid_max: int,
                    criterion: str = "mase_holdout") -> list[GridCell]:
    """Score every (alphaOrder, betaOrder) cell with both orders in 0..grid_max.

    The default criterion is one-step holdout scaled error on the final 20%
    of time steps; ``bic`` scores an in-sample information criterion
    instead. Cells whose model cannot be built or fitted are marked
    unavailable rather than failing the scan. The result is sorted by
    ascending score with deterministic (alpha_order, beta_order) tie-breaks;
    unavailable cells sort last.
    """
    if grid_max < 0:
        raise ModelError(f"grid_max must be >= 0, got {grid_max}")
    if criterion not in ("mase_holdout", "bic"):
        raise ModelError(f"unknown criterion {criterion!r}")
    scorer = _holdout_mase if criterion == "mase_holdout" else _bic

    cells = []
    for a in range(grid_max + 1):
        for b in range(grid_max + 1):
            try:
                order = grid_order(a, b)
            except ModelError as exc:
                cells.append(GridCell(a, b, None, None, note=str(exc)))
                continue
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    score = scorer(series, net, order)
            except ModelError as exc:
                cells.append(GridCell(a, b, order, None, note=str(exc)))
                continue
            if not np.isfinite(score):
                cells.append(GridCell(a, b, order, None, note="score undefined"))
                continue
            cells.append(GridCell(a, b, order, float(score)))

    cells.sort(key=lambda c: ((0, c.score) if c.available else (1, 0.0),
                              c.alpha_order, c.beta_order))
    return cells
