import json

import numpy as np
import pytest

from jtt.dataset import (
    GraphSpec,
    GroupData,
    GroupDataset,
    complete_graph,
    load_dataset,
    load_graph,
    validate_dataset,
    write_long_csv,
)
from jtt.errors import DatasetError


def write_group_csv(path, y, X):
    X = np.atleast_2d(X)
    header = "y," + ",".join(f"x{i}" for i in range(1, X.shape[1] + 1))
    lines = [header] + [
        ",".join(repr(float(v)) for v in [y[i], *X[i]]) for i in range(len(y))
    ]
    path.write_text("\n".join(lines) + "\n")


def test_manifest_two_groups_dimensions(tmp_path):
    for name in ("a", "b"):
        write_group_csv(tmp_path / f"{name}.csv", [1.0, 2.0, 3.0], np.ones((3, 1)))
    manifest = tmp_path / "manifest.json"
    manifest.write_text(json.dumps({"groups": {"a": "a.csv", "b": "b.csv"}}))
    d = load_dataset(manifest)
    assert (d.m, d.p, d.n, d.N) == (2, 1, 6, 4)


def test_long_csv_vertex_ids_by_first_appearance(tmp_path):
    rows = ["group,y,x1"]
    for g in ("B", "A", "C", "B", "A", "C"):
        rows.append(f"{g},1.0,2.0")
    path = tmp_path / "long.csv"
    path.write_text("\n".join(rows) + "\n")
    d = load_dataset(path)
    assert d.m == 3
    assert [g.name for g in d.groups] == ["B", "A", "C"]


def test_column_count_mismatch_across_groups(tmp_path):
    write_group_csv(tmp_path / "a.csv", [1.0, 2.0, 3.0], np.ones((3, 2)))
    write_group_csv(tmp_path / "b.csv", [1.0, 2.0, 3.0, 4.0], np.ones((4, 3)))
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"groups": {"a": "a.csv", "b": "b.csv"}}))
    with pytest.raises(DatasetError, match="column-count mismatch"):
        load_dataset(manifest)


def test_missing_file_and_empty_group(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"groups": {"a": "nope.csv"}}))
    with pytest.raises(DatasetError, match="not found"):
        load_dataset(manifest)
    bad = tmp_path / "empty.csv"
    bad.write_text("y,x1\n")
    manifest.write_text(json.dumps({"groups": {"a": "empty.csv", "b": "empty.csv"}}))
    with pytest.raises(DatasetError, match="no data rows"):
        load_dataset(manifest)


def test_non_numeric_cell(tmp_path):
    path = tmp_path / "long.csv"
    path.write_text("group,y,x1\nA,1.0,oops\nB,2.0,1.0\n")
    with pytest.raises(DatasetError, match="non-numeric"):
        load_dataset(path)


def test_add_intercept_from_manifest(tmp_path):
    write_group_csv(tmp_path / "a.csv", [1.0, 2.0, 3.0], np.arange(3.0).reshape(3, 1))
    write_group_csv(tmp_path / "b.csv", [1.0, 2.0, 3.0], np.arange(3.0).reshape(3, 1))
    manifest = tmp_path / "m.json"
    manifest.write_text(
        json.dumps({"groups": {"a": "a.csv", "b": "b.csv"}, "add_intercept": True})
    )
    d = load_dataset(manifest)
    assert d.p == 2
    assert np.all(d.group(1).X[:, 0] == 1.0)


def test_validate_flags_rank_deficiency():
    X = np.ones((6, 2))  # duplicated column
    g1 = GroupData(index=1, y=np.arange(6.0), X=X)
    g2 = GroupData(index=2, y=np.arange(6.0), X=np.random.default_rng(0).normal(size=(6, 2)))
    rep = validate_dataset(GroupDataset(groups=(g1, g2)))
    assert not rep.passed
    assert rep.groups[0].rank == 1
    assert any("group 1" in msg for msg in rep.messages)


def test_validate_flags_small_N():
    rng = np.random.default_rng(1)
    groups = tuple(
        GroupData(index=j, y=rng.normal(size=3), X=rng.normal(size=(3, 2)))
        for j in (1, 2)
    )
    rep = validate_dataset(GroupDataset(groups=groups))  # N = 6 - 4 = 2
    assert not rep.passed
    assert any("N-4" in msg for msg in rep.messages)


def test_validate_passes_on_clean_data():
    rng = np.random.default_rng(2)
    p = 3
    groups = tuple(
        GroupData(index=j, y=rng.normal(size=p + 5), X=rng.normal(size=(p + 5, p)))
        for j in (1, 2)
    )
    rep = validate_dataset(GroupDataset(groups=groups))
    assert rep.passed and rep.N == 2 * (p + 5) - 2 * p


def test_complete_graph():
    assert complete_graph(3).edges == ((1, 2), (1, 3), (2, 3))
    assert complete_graph(5).q == 10
    assert complete_graph(20).q == 190
    with pytest.raises(DatasetError):
        complete_graph(1)


def test_load_graph_normalization(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("2,1\n1,2\n")
    g = load_graph(path, m=3)
    assert g.edges == ((1, 2),)


def test_load_graph_self_loop_and_range(tmp_path):
    path = tmp_path / "edges.csv"
    path.write_text("3,3\n")
    with pytest.raises(DatasetError, match="self-loop"):
        load_graph(path, m=5)
    path.write_text("1,99\n")
    with pytest.raises(DatasetError, match="out of range"):
        load_graph(path, m=5)


def test_graphspec_invariants():
    with pytest.raises(DatasetError):
        GraphSpec(m=4, edges=((2, 2),))
    with pytest.raises(DatasetError):
        GraphSpec(m=4, edges=((3, 2),))  # must be k < l
    g = GraphSpec(m=4, edges=((3, 4), (1, 2)))
    assert g.edges == ((1, 2), (3, 4))  # sorted for deterministic iteration


def test_load_write_roundtrip_idempotent(tmp_path, rng):
    rows = ["group,y,x1,x2"]
    for g in ("A", "A", "A", "A", "B", "B", "B", "B"):
        vals = rng.normal(size=3)
        rows.append(f"{g}," + ",".join(repr(float(v)) for v in vals))
    src = tmp_path / "src.csv"
    src.write_text("\n".join(rows) + "\n")

    d1 = load_dataset(src)
    out1 = tmp_path / "out1.csv"
    write_long_csv(d1, out1)
    d2 = load_dataset(out1)
    out2 = tmp_path / "out2.csv"
    write_long_csv(d2, out2)
    assert out1.read_bytes() == out2.read_bytes()
