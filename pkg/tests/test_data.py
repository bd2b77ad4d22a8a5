import numpy as np
import pytest

from stiefel_givens.data import DataError, holdout_mask, read_matrix, read_network, read_observations, write_observations


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_observations_with_and_without_header(tmp_path):
    a = read_observations(_write(tmp_path, "a.csv", "x,y\n1,2\n3,4\n5,6\n"))
    b = read_observations(_write(tmp_path, "b.csv", "1,2\n3,4\n5,6\n"))
    assert a.N == b.N == 3
    np.testing.assert_allclose(a.Sigma_hat, b.Sigma_hat)
    np.testing.assert_allclose(a.Sigma_hat, np.array([[35, 44], [44, 56]]) / 3)


def test_ragged_row_reports_line(tmp_path):
    with pytest.raises(DataError, match="row 3"):
        read_matrix(_write(tmp_path, "r.csv", "a,b\n1,2\n3\n"))
    with pytest.raises(DataError, match="row 2"):
        read_matrix(_write(tmp_path, "r2.csv", "1,2\n3,x\n"))


def test_write_read_roundtrip(tmp_path, rng):
    X = rng.standard_normal((7, 3))
    write_observations(tmp_path / "x.csv", X)
    np.testing.assert_array_equal(read_matrix(tmp_path / "x.csv"), X)


def test_dense_and_edge_list_agree(tmp_path):
    dense = _write(tmp_path, "d.csv", "0,1,0\n1,0,1\n0,1,0\n")
    edges = _write(tmp_path, "e.csv", "source,target\na,b\nb,c\n")
    np.testing.assert_array_equal(read_network(dense).adjacency, read_network(edges).adjacency)


def test_network_errors(tmp_path):
    with pytest.raises(DataError, match="symmetric"):
        read_network(_write(tmp_path, "n.csv", "0,1,0\n0,0,1\n0,1,0\n"))
    with pytest.raises(DataError, match="square"):
        read_network(_write(tmp_path, "s.csv", "0,1,0\n1,0,1\n"))
    with pytest.raises(DataError, match="self-loop"):
        read_network(_write(tmp_path, "l.csv", "a,a\n"))


def test_holdout_mask(rng):
    m = holdout_mask(30, 0.2, rng)
    assert np.array_equal(m, m.T) and not m.diagonal().any()
    hidden = np.sum(~np.triu(m, 1)[np.triu_indices(30, 1)])
    assert hidden == int(0.2 * 435)
