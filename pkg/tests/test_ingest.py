import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnarcast import (
    CountyNetwork,
    IngestError,
    NetworkTimeSeries,
    Transform,
    aggregate_weekly,
    build_network_from_flows,
    invert,
    network_stats,
    normalize_fips,
    parse_cases,
    parse_flows,
    to_panel,
    transform,
)
from gnarcast.ingest import FlowRecord
from conftest import make_series


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# -- FIPS normalization -----------------------------------------------------------


def test_normalize_fips_pads():
    assert normalize_fips("1001") == "01001"
    assert normalize_fips("01001") == "01001"


def test_normalize_fips_rejects_garbage():
    with pytest.raises(IngestError):
        normalize_fips("12a45")
    with pytest.raises(IngestError):
        normalize_fips("123456")


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="0123456789", min_size=1, max_size=5))
def test_normalize_fips_idempotent(code):
    once = normalize_fips(code)
    assert normalize_fips(once) == once
    assert len(once) == 5


# -- flow parsing -------------------------------------------------------------------


FLOWS_OK = """from_fips,to_fips,commuters
01001,01003,250
1001,1005,10
01001,01001,500
01003,01001,75
"""


def test_parse_flows_records_and_flags(tmp_path):
    result = parse_flows(write(tmp_path, "flows.csv", FLOWS_OK))
    assert result.records[0] == FlowRecord("01001", "01003", 250)
    assert result.records[1] == FlowRecord("01001", "01005", 10)  # zero-padded
    assert FlowRecord("01001", "01001", 500) in result.records
    assert any(f.kind == "self_flow" and f.fips == "01001" for f in result.report.flags)
    assert result.report.row_errors == []


def test_parse_flows_collects_row_errors(tmp_path):
    text = ("from_fips,to_fips,commuters\n"
            "01001,01003,-4\n"
            "01001,01003\n"
            "x1,01003,5\n"
            "01001,01003,many\n"
            "01001,01003,7\n")
    result = parse_flows(write(tmp_path, "flows.csv", text))
    assert len(result.records) == 1
    lines = [e.line for e in result.report.row_errors]
    assert lines == [2, 3, 4, 5]
    assert "negative" in result.report.row_errors[0].reason


def test_parse_flows_totality(tmp_path):
    # record count + diagnostic count = data-line count
    text = ("from_fips,to_fips,commuters\n"
            "01001,01003,1\n"
            "bad\n"
            "01003,01001,2\n"
            ",,\n")
    result = parse_flows(write(tmp_path, "flows.csv", text))
    assert len(result.records) + len(result.report.row_errors) == 4


def test_parse_flows_header_required(tmp_path):
    with pytest.raises(IngestError, match="header"):
        parse_flows(write(tmp_path, "flows.csv", "a,b,c\n1,2,3\n"))
    with pytest.raises(IngestError, match="header"):
        parse_flows(write(tmp_path, "empty.csv", ""))


def test_parse_flows_report_shape(tmp_path):
    result = parse_flows(write(tmp_path, "flows.csv", FLOWS_OK))
    doc = result.report.to_json_dict()
    assert set(doc) == {"file", "row_errors", "flags"}
    assert doc["flags"][0] == {"fips": "01001", "kind": "self_flow"}


# -- network building -----------------------------------------------------------------


def test_build_network_sums_duplicates():
    records = [FlowRecord("00001", "00002", 100), FlowRecord("00001", "00002", 50)]
    net = build_network_from_flows(records)
    assert net.edges() == [("00001", "00002", 150.0)]
    assert net.weight_mode == "commuters"


def test_build_network_empty_rejected():
    with pytest.raises(IngestError, match="empty"):
        build_network_from_flows([])


def test_build_network_directedness():
    records = [FlowRecord("00001", "00002", 10), FlowRecord("00002", "00001", 5)]
    net = build_network_from_flows(records)
    assert len(net.edges()) == 2
    assert network_stats(net).edge_count == 1  # undirected sense


def test_build_network_drops_self_flows_and_zero_totals():
    records = [FlowRecord("00001", "00001", 500),
               FlowRecord("00001", "00002", 0),
               FlowRecord("00002", "00001", 3)]
    net = build_network_from_flows(records)
    assert set(net.nodes) == {"00001", "00002"}
    assert net.edges() == [("00002", "00001", 3.0)]


def test_build_network_order_independent():
    rng = np.random.default_rng(0)
    records = [FlowRecord(f"{a:05d}", f"{b:05d}", int(c))
               for a, b, c in rng.integers(1, 40, size=(60, 3)) if a != b]
    net1 = build_network_from_flows(records)
    shuffled = list(records)
    rng.shuffle(shuffled)
    net2 = build_network_from_flows(shuffled)
    assert net1.nodes == net2.nodes
    assert net1.edges() == net2.edges()


def test_build_network_warns_on_missing_attrs():
    records = [FlowRecord("00001", "00002", 5)]
    from gnarcast import NodeAttrs
    with pytest.warns(UserWarning, match="no attributes"):
        build_network_from_flows(records, node_attrs={"00001": NodeAttrs(state="01")})


# -- case tables ------------------------------------------------------------------------


CASES_OK = """countyFIPS,County Name,State,StateFIPS,2020-01-22,2020-01-23,2020-01-24,2020-01-25,2020-01-26
1001,Autauga County,AL,01,0,1,1,2,3
01003,Baldwin County,AL,01,0,0,1,1,1
0,Statewide Unallocated,AL,01,0,0,0,0,0
44001,Bristol County,RI,44,2,2,3,5,4
"""


def test_parse_cases_fixture(tmp_path):
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK))
    assert table.fips == ("01001", "01003", "00000", "44001")
    assert table.values.shape == (4, 5)
    assert table.dates[0] == datetime.date(2020, 1, 22)
    assert table.states == ("AL", "AL", "AL", "RI")
    kinds = {(f.fips, f.kind) for f in table.report.flags}
    assert ("00000", "unallocated_fips0") in kinds
    assert ("44001", "non_monotone_cumulative") in kinds  # 5 -> 4 revision


def test_parse_cases_negative_and_non_integer_flagged(tmp_path):
    text = ("countyFIPS,County Name,State,StateFIPS,2020-01-22,2020-01-23\n"
            "01001,A,AL,01,-1,2\n"
            "01003,B,AL,01,0.5,1.5\n")
    table = parse_cases(write(tmp_path, "cases.csv", text))
    kinds = {(f.fips, f.kind) for f in table.report.flags}
    assert ("01001", "negative_count") in kinds
    assert ("01003", "non_integer_count") in kinds


def test_parse_cases_structural_errors(tmp_path):
    with pytest.raises(IngestError, match="expected header"):
        parse_cases(write(tmp_path, "a.csv", "x,y\n1,2\n"))
    ragged = ("countyFIPS,County Name,State,StateFIPS,2020-01-22,2020-01-23\n"
              "01001,A,AL,01,1\n")
    with pytest.raises(IngestError, match="expected 6 fields"):
        parse_cases(write(tmp_path, "b.csv", ragged))
    baddate = "countyFIPS,County Name,State,StateFIPS,not-a-date\n01001,A,AL,01,1\n"
    with pytest.raises(IngestError, match="unparseable date"):
        parse_cases(write(tmp_path, "c.csv", baddate))
    gap = ("countyFIPS,County Name,State,StateFIPS,2020-01-22,2020-01-24\n"
           "01001,A,AL,01,1,2\n")
    with pytest.raises(IngestError, match="one day per column"):
        parse_cases(write(tmp_path, "d.csv", gap))
    dupe = ("countyFIPS,County Name,State,StateFIPS,2020-01-22\n"
            "01001,A,AL,01,1\n01001,A,AL,01,2\n")
    with pytest.raises(IngestError, match="duplicate county"):
        parse_cases(write(tmp_path, "e.csv", dupe))


def test_parse_cases_repair_flag_clamps_to_running_max(tmp_path):
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK), repair_non_monotone=True)
    row = table.values[table.fips.index("44001")]
    assert row.tolist() == [2.0, 2.0, 3.0, 5.0, 5.0]  # the 5 -> 4 dip is clamped
    kinds = {(f.fips, f.kind) for f in table.report.flags}
    assert ("44001", "non_monotone_cumulative") in kinds  # still reported


def test_parse_cases_alternate_date_formats(tmp_path):
    text = ("countyFIPS,County Name,State,StateFIPS,1/22/2020,1/23/2020\n"
            "01001,A,AL,01,1,2\n")
    table = parse_cases(write(tmp_path, "cases.csv", text))
    assert table.dates == (datetime.date(2020, 1, 22), datetime.date(2020, 1, 23))


# -- panel alignment ---------------------------------------------------------------------


def _net_for_panel():
    ids = ["44001", "01003", "01001"]
    return CountyNetwork(ids, [("01001", "01003", 4.0), ("44001", "01001", 2.0)],
                         "commuters")


def test_to_panel_reorders_columns(tmp_path):
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK))
    net = _net_for_panel()
    panel, missing = to_panel(table, net)
    assert missing == []
    assert panel.values.shape == (5, 3)
    assert panel.frequency == "daily"
    assert panel.start_date == datetime.date(2020, 1, 22)
    # column order follows the network, not the file
    assert panel.values[:, 0].tolist() == [2.0, 2.0, 3.0, 5.0, 4.0]
    assert panel.values[:, 2].tolist() == [0.0, 1.0, 1.0, 2.0, 3.0]


def test_to_panel_missing_node_zero_filled(tmp_path):
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK))
    ids = ["01001", "99999"]
    net = CountyNetwork(ids, [("01001", "99999", 1.0)], "commuters")
    panel, missing = to_panel(table, net)
    assert missing == ["99999"]
    assert np.all(panel.values[:, 1] == 0.0)


def test_to_panel_never_maps_unallocated_rows(tmp_path):
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK))
    net = CountyNetwork(["00000", "01001"], [("00000", "01001", 1.0)], "commuters")
    panel, missing = to_panel(table, net)
    assert missing == ["00000"]


def test_panel_network_round_trip_preserves_hash(tmp_path):
    net = _net_for_panel()
    back = CountyNetwork.from_json(net.to_json())
    assert back.node_order_hash == net.node_order_hash
    table = parse_cases(write(tmp_path, "cases.csv", CASES_OK))
    a, _ = to_panel(table, net)
    b, _ = to_panel(table, back)
    assert np.array_equal(a.values, b.values)


# -- weekly aggregation --------------------------------------------------------------------


def test_aggregate_weekly_samples_boundaries():
    daily = make_series(np.arange(28.0).reshape(14, 2), frequency="daily")
    weekly = aggregate_weekly(daily)
    assert weekly.n_steps == 2
    assert weekly.values[0].tolist() == [0.0, 1.0]    # row 1
    assert weekly.values[1].tolist() == [14.0, 15.0]  # row 8
    assert weekly.frequency == "weekly"
    assert weekly.start_date == daily.start_date


def test_aggregate_weekly_constant_series():
    daily = make_series(np.full((21, 3), 9.0), frequency="daily")
    assert np.all(aggregate_weekly(daily).values == 9.0)


def test_aggregate_weekly_378_days_gives_54_weeks():
    daily = make_series(np.zeros((378, 1)), frequency="daily")
    assert aggregate_weekly(daily).n_steps == 54


def test_aggregate_weekly_drops_trailing_partial():
    daily = make_series(np.zeros((20, 1)), frequency="daily")
    assert aggregate_weekly(daily).n_steps == 3  # rows 1, 8, 15


def test_aggregate_weekly_validation():
    with pytest.raises(IngestError, match="daily"):
        aggregate_weekly(make_series(np.zeros((20, 1)), frequency="weekly"))
    with pytest.raises(IngestError, match="at least 7"):
        aggregate_weekly(make_series(np.zeros((5, 1)), frequency="daily"))


def test_aggregate_weekly_commutes_with_permutation():
    rng = np.random.default_rng(1)
    values = rng.normal(size=(30, 6))
    perm = rng.permutation(6)
    a = aggregate_weekly(make_series(values[:, perm], frequency="daily"))
    b = aggregate_weekly(make_series(values, frequency="daily"))
    assert np.array_equal(a.values, b.values[:, perm])


# -- transformations -------------------------------------------------------------------------


def test_identity_transform_is_noop():
    series = make_series(np.arange(6.0).reshape(3, 2))
    t = Transform("identity")
    assert transform(series, t) is series
    assert invert(series, t) is series


def test_sqrt_transform_example():
    series = make_series(np.array([[0.0], [4.0], [9.0]]))
    out = transform(series, Transform("sqrt"))
    assert out.values[:, 0].tolist() == [0.0, 2.0, 3.0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_transform_round_trips(seed):
    rng = np.random.default_rng(seed)
    values = np.abs(rng.normal(size=(8, 3))) * rng.uniform(0.1, 100)
    series = make_series(values)
    for kind in ("identity", "log1p", "sqrt", "zscore"):
        t = Transform(kind)
        restored = invert(transform(series, t), t)
        assert np.allclose(restored.values, series.values, atol=1e-9)


def test_zscore_handles_constant_columns_exactly():
    values = np.column_stack([np.full(6, 5.0), np.arange(6.0)])
    series = make_series(values)
    t = Transform("zscore")
    out = transform(series, t)
    assert np.all(out.values[:, 0] == 0.0)
    assert np.array_equal(invert(out, t).values, values)


def test_zscore_refit_refreshes_parameters():
    t = Transform("zscore")
    a = make_series(np.arange(12.0).reshape(6, 2))
    b = make_series(np.arange(12.0).reshape(6, 2) * 100.0)
    transform(a, t)
    out = t.refit(b)
    assert abs(out.values.mean()) < 1e-12


def test_zscore_invert_requires_fit():
    with pytest.raises(IngestError, match="no fitted parameters"):
        invert(make_series(np.ones((3, 2))), Transform("zscore"))


def test_negative_domain_rejected():
    series = make_series(np.array([[-1.0, 2.0]]))
    for kind in ("log1p", "sqrt"):
        with pytest.raises(IngestError, match="non-negative"):
            transform(series, Transform(kind))


def test_unknown_transform_kind():
    with pytest.raises(IngestError, match="unknown transform"):
        Transform("boxcox")
