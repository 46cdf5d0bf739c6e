import numpy as np
import pytest

from lapcompress.graph import build_laplacian, is_strongly_connected
from lapcompress.ingest import (
    SYNTH_DEFAULTS,
    DataParseError,
    bundled_graph,
    clean,
    data_path,
    dataset_csv,
    load_dataset,
    read_snapshot_csv,
    read_snapshots,
    snapshot_csv,
    synthesize_field_data,
)


def load_toy():
    return load_dataset(data_path("toy3.edges"), data_path("toy3.csv"), data_path("toy3.labels"))


def load_fixture():
    return load_dataset(data_path("us_states.edges"), data_path("us_states_synthetic.csv"),
                        data_path("us_states.labels"), data_path("us_states.coords"))


def test_toy_dataset():
    ds = load_toy()
    assert ds.graph.n == 3 and ds.days == (0, 1, 2, 3, 4)
    assert ds.label == "toy3"
    # forward fill from the previous day
    assert ds.values[1, 1] == 0.20 and ds.values[3, 0] == 0.15
    assert not np.isnan(ds.values).any()


def test_wrong_column_count_names_line(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time_index,a,b,c\n0,1,2,3\n1,1,2\n")
    with pytest.raises(DataParseError, match=r"bad\.csv:3: expected 4 columns, found 3"):
        load_dataset(data_path("toy3.edges"), p, data_path("toy3.labels"))


def test_unparseable_cell(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time_index,node_0,node_1,node_2\r\n0,1,x,3\r\n")
    with pytest.raises(DataParseError, match=":2: cannot parse 'x'"):
        read_snapshot_csv(p)


def test_node_count_mismatch(tmp_path):
    p = tmp_path / "short.csv"
    p.write_text("time_index,node_0,node_1\n0,1,2\n")
    with pytest.raises(DataParseError, match="2 node columns but the graph has 3"):
        load_dataset(data_path("toy3.edges"), p)


@pytest.mark.property
def test_clean_rules():
    nan = np.nan
    values = np.array([[nan, 1.0], [2.0, nan], [nan, nan], [nan, 4.0]])
    out, kept = clean(values)
    assert kept.tolist() == [True, True, False, True]
    np.testing.assert_array_equal(out, [[2.0, 1.0], [2.0, 1.0], [2.0, 4.0]])
    again, kept2 = clean(out)
    np.testing.assert_array_equal(again, out)
    assert kept2.all()
    with pytest.raises(DataParseError, match="node 1"):
        clean(np.array([[1.0, nan], [2.0, nan]]))


def test_dropped_day_warns(tmp_path):
    p = tmp_path / "gap.csv"
    p.write_text("time_index,a,b,c\n0,1,2,3\n1,,,\n2,1,2,3\n")
    with pytest.warns(UserWarning, match=r"\[1\]"):
        ds = load_dataset(data_path("toy3.edges"), p, data_path("toy3.labels"))
    assert ds.days == (0, 2)


def test_non_increasing_days(tmp_path):
    p = tmp_path / "order.csv"
    p.write_text("time_index,a,b,c\n1,1,2,3\n0,1,2,3\n")
    with pytest.raises(DataParseError, match="increasing"):
        load_dataset(data_path("toy3.edges"), p, data_path("toy3.labels"))


@pytest.mark.property
def test_round_trip_bitwise(tmp_path):
    ds = load_toy()
    p = tmp_path / "again.csv"
    p.write_text(dataset_csv(ds))
    back = load_dataset(data_path("toy3.edges"), p, data_path("toy3.labels"))
    assert back.values.tobytes() == ds.values.tobytes() and back.days == ds.days
    assert p.read_text() == dataset_csv(back)


def test_read_snapshots_both_flavours(tmp_path):
    snaps, kind = read_snapshots(data_path("toy3.csv"), ("a", "b", "c"))
    assert kind == "field" and len(snaps) == 5
    p = tmp_path / "sim.csv"
    p.write_text("instance_id,time_index,node_0,node_1\n0,5,1,0\n1,5,0,1\n")
    snaps, kind = read_snapshots(p)
    assert kind == "simulation" and [s.instance_id for s in snaps] == [0, 1]


def test_bundled_graph():
    g = bundled_graph()
    assert g.n == 49 and len(g.edges) == 2 * 107
    assert g.is_symmetric() and is_strongly_connected(g)
    assert g.coords.shape == (49, 2)
    labels = dict(enumerate(g.node_labels))
    assert "DC" in labels.values() and "AK" not in labels.values() and "HI" not in labels.values()
    L = build_laplacian(g)
    np.testing.assert_array_equal(L, L.T)


def test_bundled_fixture_loads():
    ds = load_fixture()
    assert ds.graph.n == 49 and len(ds.snapshots) == 250
    assert ds.values.min() >= 0 and ds.values.max() <= 1


def test_fixture_regenerates_bitwise():
    g = bundled_graph()
    text = snapshot_csv(range(250), synthesize_field_data(g, 250, seed=0), g.node_labels)
    assert text == data_path("us_states_synthetic.csv").read_text()


def test_weekend_offset():
    g = bundled_graph()
    base = synthesize_field_data(g, 7, seed=2, weekend_offset=0.0)
    bumped = synthesize_field_data(g, 7, seed=2, weekend_offset=0.05)
    diff = bumped - base
    unclipped = (bumped > 0) & (bumped < 1) & (base > 0) & (base < 1)
    # no change midweek
    assert np.all(diff[1:6] == 0)
    weekend = diff[[0, 6]][unclipped[[0, 6]]]
    assert np.all(weekend >= 0.05 - 1e-12) and np.all(weekend <= 0.10 + 1e-12)


def test_zero_noise_is_deterministic_signal():
    g = bundled_graph()
    a = synthesize_field_data(g, 30, seed=1, noise=0.0)
    b = synthesize_field_data(g, 30, seed=1, noise=0.0)
    noisy = synthesize_field_data(g, 30, seed=1)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, noisy)
    # the noise term is the only difference where nothing clips
    ok = (noisy > 0) & (noisy < 1) & (a > 0) & (a < 1)
    resid = (noisy - a)[ok] / SYNTH_DEFAULTS["noise"]
    assert abs(resid.mean()) < 0.1 and abs(resid.std() - 1) < 0.1


def test_unknown_synthesis_parameter():
    with pytest.raises(TypeError, match="unknown"):
        synthesize_field_data(bundled_graph(), 3, wobble=1.0)
