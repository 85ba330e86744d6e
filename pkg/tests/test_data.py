import logging

import numpy as np
import pytest

from grafair.data import (DATASETS, load_dataset, load_graph_files, read_edge_file, read_feature_csv,
                          read_mask_file, synth_biased_graph, write_graph_files, write_mask_file)
from grafair.errors import InvalidParameter, MissingFile, ParseError
from grafair.graph import SplitSpec


def test_bundled_german_matches_published_statistics(caplog):
    with caplog.at_level(logging.WARNING):
        g = load_dataset("german")
    assert (g.n, g.num_features, g.num_edges) == (1000, 27, 22242)
    assert "published statistics" not in caplog.text
    assert g.feature_names[g.sensitive_col] == "Gender"
    assert set(np.unique(g.sensitive)) == {0, 1}
    # non-sensitive columns are scaled into [-1, 1]
    others = np.delete(g.features, g.sensitive_col, axis=1)
    assert others.min() >= -1 and others.max() <= 1


def test_registry_statistics():
    assert (DATASETS["credit"].nodes, DATASETS["credit"].features, DATASETS["credit"].edges) == (30000, 13, 1436858)
    assert (DATASETS["bail"].nodes, DATASETS["bail"].features, DATASETS["bail"].edges) == (18876, 18, 321308)


def test_missing_dataset_files(tmp_path):
    with pytest.raises(MissingFile):
        load_dataset("bail", root=tmp_path)
    with pytest.raises(InvalidParameter):
        load_dataset("cora")


def write(path, text):
    path.write_text(text)
    return path


def test_truncated_csv_names_the_line(tmp_path):
    p = write(tmp_path / "f.csv", "a,s,y\n1,0,1\n2,1\n")
    with pytest.raises(ParseError, match=r"line 3"):
        read_feature_csv(p, "s", "y")


def test_non_numeric_cell(tmp_path):
    p = write(tmp_path / "f.csv", "a,s,y\n1,0,1\nx,1,0\n")
    with pytest.raises(ParseError, match=r"line 3.*'x'"):
        read_feature_csv(p, "s", "y")


def test_feature_csv_drops_label(tmp_path):
    p = write(tmp_path / "f.csv", "a,s,y,b\n1,0,1,5\n2,1,0,6\n")
    x, names, y, s_col = read_feature_csv(p, "s", "y")
    assert names == ("a", "s", "b") and s_col == 1
    np.testing.assert_array_equal(y, [1, 0])
    np.testing.assert_array_equal(x, [[1, 0, 5], [2, 1, 6]])


def test_edge_file_formats(tmp_path):
    p = write(tmp_path / "e.txt", "# comment\n0 1\n1,2\n2\t0\n\n3.0 1.0\n")
    assert read_edge_file(p).tolist() == [[0, 1], [1, 2], [2, 0], [3, 1]]
    with pytest.raises(ParseError, match="line 1"):
        read_edge_file(write(tmp_path / "bad.txt", "0 1 2\n"))
    with pytest.raises(ParseError):
        read_edge_file(write(tmp_path / "bad2.txt", "0 1.5\n"))


def test_mask_file_roundtrip(tmp_path):
    g = synth_biased_graph(30, 0.7, 0.5, 1)
    write_mask_file(tmp_path / "m.csv", g)
    tr, va, te = read_mask_file(tmp_path / "m.csv", g.n)
    np.testing.assert_array_equal(tr, g.train_mask)
    np.testing.assert_array_equal(te, g.test_mask)
    with pytest.raises(ParseError):
        read_mask_file(write(tmp_path / "bad.csv", "node_id,split\n0,holdout\n"), 5)


def test_write_graph_files_roundtrip(tmp_path):
    g = synth_biased_graph(40, 0.8, 0.5, 2)
    paths = write_graph_files(g, tmp_path)
    h = load_graph_files(paths["features"], paths["edges"], "s", "label", mask_path=paths["masks"],
                         feature_norm="none")
    assert h == g


def test_synth_is_deterministic_and_valid():
    a = synth_biased_graph(100, 0.9, 0.8, 7)
    assert a == synth_biased_graph(100, 0.9, 0.8, 7)
    assert a != synth_biased_graph(100, 0.9, 0.8, 8)
    np.testing.assert_array_equal(a.features[:, 0], a.sensitive)
    with pytest.raises(InvalidParameter):
        synth_biased_graph(5, 0.5, 0.5, 0)
    with pytest.raises(InvalidParameter):
        synth_biased_graph(50, 1.5, 0.5, 0)


def test_synth_bias_controls_label_correlation():
    fair = [synth_biased_graph(400, 0.9, 0.0, s) for s in range(5)]
    gap = np.mean([abs(g.labels[g.sensitive == 1].mean() - g.labels[g.sensitive == 0].mean()) for g in fair])
    assert gap < 0.06
    biased = synth_biased_graph(2000, 0.9, 0.8, 0)
    assert np.mean(biased.labels == biased.sensitive) == pytest.approx(0.9, abs=0.03)


def test_synth_homophily_half_balances_edges():
    intra = inter = intra_pairs = inter_pairs = 0
    for seed in range(20):
        g = synth_biased_graph(200, 0.5, 0.5, seed)
        e = g.edges()
        same = g.sensitive[e[:, 0]] == g.sensitive[e[:, 1]]
        intra += same.sum()
        inter += (~same).sum()
        n1 = g.sensitive.sum()
        n0 = g.n - n1
        intra_pairs += n0 * (n0 - 1) // 2 + n1 * (n1 - 1) // 2
        inter_pairs += n0 * n1
    r_in, r_out = intra / intra_pairs, inter / inter_pairs
    se = np.sqrt(r_in * (1 - r_in) / intra_pairs + r_out * (1 - r_out) / inter_pairs)
    assert abs(r_in - r_out) < 4 * se


def test_synth_homophily_high_is_mostly_intra():
    g = synth_biased_graph(300, 0.9, 0.5, 0)
    e = g.edges()
    assert np.mean(g.sensitive[e[:, 0]] == g.sensitive[e[:, 1]]) > 0.85


def test_custom_split(tmp_path):
    g = synth_biased_graph(60, 0.5, 0.0, 0, split=SplitSpec(ratios=(0.6, 0.2, 0.2), seed=1))
    assert g.train_mask.sum() == 36
