"""Batch command-line front end.

Subcommands wire ingestion, network construction, fitting, and evaluation
into reproducible runs. Every command is a pure function of its config and
input files: outputs are written atomically (temp-and-rename), floats are
rendered with shortest round-trip repr, and parallel sweeps assemble their
outputs in a fixed order, so reruns are byte-identical regardless of worker
count.

Exit codes: 0 success, 1 evaluation cells failed, 2 input/validation failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import evaluate as ev
from .graph import NetworkError, degree_histogram, extract_state_subnetwork, \
    network_stats, reweight, triangular_lattice
from .ingest import IngestError, Transform, aggregate_weekly, build_network_from_flows, \
    parse_cases, parse_flows, to_panel
from .model import GnarCoefficients, GnarOrder, ModelError, model_selection, preset, simulate
from .series import NetworkTimeSeries, SeriesError

EXIT_OK = 0
EXIT_CELL_FAILURES = 1
EXIT_INPUT_ERROR = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved options for one command invocation."""

    out: str | None = None
    flows: str | None = None
    cases: str | None = None
    deaths: str | None = None
    states: list[str] = field(default_factory=list)
    frequency: str = "weekly"
    models: list[int] = field(default_factory=lambda: [1, 2, 3])
    test_periods: int = 40
    weight_mode: str = "commuters"
    transform: str = "identity"
    seed: int = 0
    lattice: str | None = None
    workers: int = 1
    grid_max: int = 5
    criterion: str = "mase_holdout"
    diagnostics_only: bool = False
    simulate: dict = field(default_factory=dict)

    def validate(self, need_out: bool = True) -> None:
        if need_out and not self.out:
            raise ConfigError("--out directory is required")
        if self.test_periods < 1:
            raise ConfigError(f"test_periods must be >= 1, got {self.test_periods}")
        if self.frequency not in ("daily", "weekly"):
            raise ConfigError(f"frequency must be daily or weekly, got {self.frequency!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        bad_models = [m for m in self.models if m not in (1, 2, 3)]
        if bad_models:
            raise ConfigError(f"unknown model presets: {bad_models}; expected ids from 1,2,3")
        for label, path in (("flows", self.flows), ("cases", self.cases), ("deaths", self.deaths)):
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{label} file does not exist: {path}")


def _merge_config(args: argparse.Namespace) -> RunConfig:
    """defaults < config file < explicit flags."""
    cfg = RunConfig()
    if args.config:
        if not os.path.isfile(args.config):
            raise ConfigError(f"config file does not exist: {args.config}")
        with open(args.config, encoding="utf-8") as handle:
            doc = json.load(handle)
        known = {f.name for f in fields(RunConfig)}
        for key, value in doc.items():
            if key not in known:
                raise ConfigError(f"unknown config key: {key!r}")
            setattr(cfg, key, value)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    if cfg.transform == "none":
        cfg.transform = "identity"
    return cfg


# -- deterministic output helpers ---------------------------------------------


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(header: str, rows) -> str:
    return "\n".join([header, *rows]) + "\n"


# -- network assembly ---------------------------------------------------------


def _parse_lattice_spec(spec: str) -> tuple[int, int]:
    try:
        rows, cols = spec.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise ConfigError(f"--lattice expects MxN (e.g. 40x78), got {spec!r}")


def _load_network(cfg: RunConfig, out_dir: str | None = None, attrs=None):
    """Network from --lattice or --flows; returns (net, quality_report_or_None).

    ``attrs`` short-circuits the case-table parse when the caller already
    holds node attributes.
    """
    if cfg.lattice:
        rows, cols = _parse_lattice_spec(cfg.lattice)
        return triangular_lattice(rows, cols), None
    if not cfg.flows:
        raise ConfigError("either --flows or --lattice is required")
    result = parse_flows(cfg.flows)
    if attrs is None and cfg.cases:
        attrs = parse_cases(cfg.cases).node_attrs()
    if result.report.row_errors:
        if out_dir is not None:
            _write_atomic(os.path.join(out_dir, "flows_quality.json"),
                          _json_text(result.report.to_json_dict()))
        lines = "; ".join(f"line {e.line}: {e.reason}" for e in result.report.row_errors[:5])
        raise IngestError(f"{cfg.flows}: {len(result.report.row_errors)} malformed rows ({lines})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        net = build_network_from_flows(result.records, node_attrs=attrs)
    if cfg.weight_mode != "commuters":
        net = reweight(net, cfg.weight_mode)
    return net, result.report


# -- cmd: network -------------------------------------------------------------


def cmd_network(cfg: RunConfig) -> int:
    cfg.validate()
    if cfg.diagnostics_only:
        if not cfg.flows:
            raise ConfigError("--diagnostics-only needs --flows")
        result = parse_flows(cfg.flows)
        _write_atomic(os.path.join(cfg.out, "flows_quality.json"),
                      _json_text(result.report.to_json_dict()))
        return EXIT_OK

    net, report = _load_network(cfg, out_dir=cfg.out)
    stats = network_stats(net)
    hist = degree_histogram(net)

    stats_rows = [f"{name},{_fmt(getattr(stats, name))}" for name in (
        "node_count", "edge_count", "avg_degree", "closeness", "betweenness",
        "clustering_coefficient", "density", "diameter", "avg_shortest_path",
        "component_count")]
    _write_atomic(os.path.join(cfg.out, "network.json"), net.to_json() + "\n")
    _write_atomic(os.path.join(cfg.out, "stats.csv"), _csv_text("metric,value", stats_rows))
    _write_atomic(os.path.join(cfg.out, "degree_hist.csv"),
                  _csv_text("degree,count", [f"{d},{c}" for d, c in hist.items()]))
    if report is not None:
        _write_atomic(os.path.join(cfg.out, "flows_quality.json"),
                      _json_text(report.to_json_dict()))
    return EXIT_OK


# -- cmd: evaluate ------------------------------------------------------------


def _target_tables(cfg: RunConfig):
    targets = []
    if cfg.cases:
        targets.append(("cases", parse_cases(cfg.cases)))
    if cfg.deaths:
        targets.append(("deaths", parse_cases(cfg.deaths)))
    if not targets:
        raise ConfigError("evaluate needs --cases (and optionally --deaths)")
    return targets


def _panel_for(table, net, frequency: str) -> NetworkTimeSeries:
    panel, _missing = to_panel(table, net)
    if frequency == "weekly":
        panel = aggregate_weekly(panel)
    return panel


def _evaluate_cell(cfg, net_by_state, table, state, model_label):
    subnet, eval_mask = net_by_state[state]
    panel = _panel_for(table, subnet, cfg.frequency)
    order = None if model_label == "naive" else preset(int(model_label.split("_")[1]))
    tform = Transform(cfg.transform) if (cfg.transform != "identity" and order is not None) else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ev.rolling_horizon(panel, subnet, order, cfg.test_periods,
                                  eval_nodes=eval_mask, transform=tform)


def cmd_evaluate(cfg: RunConfig) -> int:
    cfg.validate()
    targets = _target_tables(cfg)
    net, _ = _load_network(cfg, attrs=dict(targets)["cases"].node_attrs() if cfg.cases else None)

    if cfg.states:
        net_by_state = {}
        for state in cfg.states:
            subnet = extract_state_subnetwork(net, state, include_external=True)
            net_by_state[state] = (subnet, subnet.state_mask(state))
        regions = list(cfg.states)
    else:
        net_by_state = {"all": (net, None)}
        regions = ["all"]

    model_labels = [f"model_{m}" for m in cfg.models] + ["naive"]
    cells = [(state, target_name, label)
             for state in regions
             for target_name, _ in targets
             for label in model_labels]
    tables = dict(targets)

    def run_cell(cell):
        state, target_name, label = cell
        try:
            return cell, _evaluate_cell(cfg, net_by_state, tables[target_name], state, label), None
        except (ValueError, ArithmeticError) as exc:
            return cell, None, f"{type(exc).__name__}: {exc}"

    results = {}
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        for cell, result, error in pool.map(run_cell, cells):
            results[cell] = (result, error)

    summary = {"states": {}, "failed_cells": []}
    any_failed = False
    for state in regions:
        state_block = {}
        for target_name, _ in targets:
            target_block = {}
            csv_rows = []
            for label in model_labels:
                result, error = results[(state, target_name, label)]
                if error is not None:
                    any_failed = True
                    summary["failed_cells"].append(
                        {"state": state, "target": target_name, "model": label, "error": error})
                    target_block[label] = {"error": error}
                    continue
                target_block[label] = ev.summary_dict(result)
                csv_rows.extend(ev.report_rows(label, result))
            state_block[target_name] = target_block
            _write_atomic(os.path.join(cfg.out, f"periods_{state}_{target_name}.csv"),
                          _csv_text(ev.REPORT_CSV_HEADER, csv_rows))
        summary["states"][state] = state_block

    _write_atomic(os.path.join(cfg.out, "summary.json"), _json_text(summary))
    return EXIT_CELL_FAILURES if any_failed else EXIT_OK


# -- cmd: simulate ------------------------------------------------------------


def _coefficients_from_config(spec: dict, order: GnarOrder, n_nodes: int) -> GnarCoefficients:
    alpha = spec.get("alpha", 0.0)
    if order.alpha_mode == "global":
        alpha_arr = np.full(order.p, float(alpha)) if np.isscalar(alpha) else np.asarray(alpha, float)
    else:
        alpha_arr = (np.full((n_nodes, order.p), float(alpha)) if np.isscalar(alpha)
                     else np.asarray(alpha, float))
    beta_spec = spec.get("beta", [[0.0] * sj for sj in order.s])
    beta = tuple(np.asarray(b, dtype=np.float64) for b in beta_spec)
    coef = GnarCoefficients(alpha=alpha_arr, beta=beta)
    coef.validate(order, n_nodes)
    return coef


def cmd_simulate(cfg: RunConfig) -> int:
    cfg.validate()
    net, _ = _load_network(cfg)
    spec = dict(cfg.simulate)
    order = GnarOrder(
        p=int(spec.get("p", 1)),
        s=tuple(spec.get("s", [1])),
        alpha_mode=spec.get("alpha_mode", "global"),
        alpha_zero=bool(spec.get("alpha_zero", False)),
    )
    coef = _coefficients_from_config(spec, order, net.n_nodes)
    T = int(spec.get("T", 60))
    sigma = float(spec.get("sigma", 0.0))
    burn_in = int(spec.get("burn_in", 50))
    init = spec.get("init")
    if init is not None:
        init = np.asarray(init, dtype=np.float64)
    start = datetime.date.fromisoformat(spec.get("start_date", "2020-01-01"))

    panel = simulate(net, order, coef, T=T, sigma=sigma, seed=cfg.seed,
                     burn_in=burn_in, init=init, frequency="daily", start_date=start)

    # panel in the cumulative-count table layout so it feeds parse_cases
    dates = [panel.date_at(t).isoformat() for t in range(panel.n_steps)]
    rows = []
    for col, node in enumerate(net.nodes):
        state = net.node_attrs[col].state or node[:2]
        cells = ",".join(repr(float(v)) for v in panel.values[:, col])
        rows.append(f"{node},Synthetic County {node},{state},{node[:2]},{cells}")
    _write_atomic(os.path.join(cfg.out, "panel.csv"),
                  _csv_text("countyFIPS,County Name,State,StateFIPS," + ",".join(dates), rows))

    flow_rows = []
    for a, b, mu in net.edges():
        if abs(mu - round(mu)) > 1e-9:
            raise ConfigError(
                "simulate can only emit flow fixtures from integer edge weights; "
                f"edge {a}->{b} has mu={mu}")
        flow_rows.append(f"{a},{b},{int(round(mu))}")
    _write_atomic(os.path.join(cfg.out, "flows.csv"),
                  _csv_text("from_fips,to_fips,commuters", flow_rows))

    truth = {
        "order": {"p": order.p, "s": list(order.s), "alpha_mode": order.alpha_mode,
                  "alpha_zero": order.alpha_zero},
        "alpha": coef.alpha.tolist(),
        "beta": [b.tolist() for b in coef.beta],
        "sigma": sigma,
        "seed": cfg.seed,
        "T": T,
        "burn_in": burn_in,
        "node_order_hash": net.node_order_hash,
    }
    _write_atomic(os.path.join(cfg.out, "truth.json"), _json_text(truth))
    _write_atomic(os.path.join(cfg.out, "network.json"), net.to_json() + "\n")
    return EXIT_OK


# -- cmd: select --------------------------------------------------------------


def cmd_select(cfg: RunConfig) -> int:
    cfg.validate()
    targets = _target_tables(cfg)
    net, _ = _load_network(cfg, attrs=dict(targets)["cases"].node_attrs() if cfg.cases else None)

    if cfg.states:
        regions = [(state, extract_state_subnetwork(net, state, include_external=True))
                   for state in cfg.states]
    else:
        regions = [("all", net)]

    doc = {}
    for state, subnet in regions:
        for target_name, table in targets:
            panel = _panel_for(table, subnet, cfg.frequency)
            cells = model_selection(panel, subnet, cfg.grid_max, criterion=cfg.criterion)
            rows = [f"{rank},{c.alpha_order},{c.beta_order},"
                    f"{_fmt(c.score) if c.available else ''},{c.note}"
                    for rank, c in enumerate(cells, start=1)]
            _write_atomic(os.path.join(cfg.out, f"selection_{state}_{target_name}.csv"),
                          _csv_text("rank,alpha_order,beta_order,score,note", rows))
            best = next((c for c in cells if c.available), None)
            doc[f"{state}/{target_name}"] = (
                {"alpha_order": best.alpha_order, "beta_order": best.beta_order,
                 "score": best.score} if best else None)
    _write_atomic(os.path.join(cfg.out, "selection.json"), _json_text(doc))
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gnarcast",
        description="Network-autoregressive forecasting over commuting networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; explicit flags override it")
        p.add_argument("--flows", help="commuting flows CSV (from_fips,to_fips,commuters)")
        p.add_argument("--cases", help="cumulative cases CSV (USAFacts layout)")
        p.add_argument("--deaths", help="cumulative deaths CSV (USAFacts layout)")
        p.add_argument("--states", type=lambda s: s.split(","),
                       help="comma-separated state codes to evaluate")
        p.add_argument("--frequency", choices=["daily", "weekly"])
        p.add_argument("--models", type=lambda s: [int(x) for x in s.split(",")],
                       help="comma-separated preset ids, e.g. 1,2,3")
        p.add_argument("--test-periods", dest="test_periods", type=int)
        p.add_argument("--weight-mode", dest="weight_mode",
                       choices=["binary", "commuters", "great_circle_km"])
        p.add_argument("--transform", choices=["none", "identity", "log1p", "sqrt", "zscore"])
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--lattice", help="synthetic lattice MxN instead of flow data")
        p.add_argument("--workers", type=int, help="parallel workers for sweeps")

    p_net = sub.add_parser("network", help="build a network and emit its statistics")
    common(p_net)
    p_net.add_argument("--diagnostics-only", dest="diagnostics_only", action="store_true",
                       default=None, help="only write the flows data-quality report")

    p_eval = sub.add_parser("evaluate", help="rolling-horizon model evaluation sweep")
    common(p_eval)

    p_sim = sub.add_parser("simulate", help="generate a synthetic panel fixture")
    common(p_sim)

    p_sel = sub.add_parser("select", help="order-selection grid scan")
    common(p_sel)
    p_sel.add_argument("--grid-max", dest="grid_max", type=int)
    p_sel.add_argument("--criterion", choices=["mase_holdout", "bic"])

    return parser


_COMMANDS = {
    "network": cmd_network,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "select": cmd_select,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, IngestError, NetworkError, ModelError, SeriesError,
            ev.EvaluationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
