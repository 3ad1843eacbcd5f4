import numpy as np
import pytest

from cellsp.complex import build_b2
from cellsp.generators import grid_complex
from cellsp.io import (
    ParseError,
    complex_to_dict,
    read_cells,
    read_complex,
    read_edges,
    read_json,
    read_matrix,
    read_samples,
    read_signal,
    write_cells,
    write_complex,
    write_edges,
    write_json,
    write_samples,
    write_signal,
    write_table,
)


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_edges_header_comments_blank(tmp_path):
    p = _write(tmp_path, "e.csv", "tail,head\n# comment\n\n1,2\n2,3\n 3 , 1 \n")
    sk = read_edges(p, index_base=1)
    assert sk.edges == ((0, 1), (1, 2), (0, 2))
    assert sk.num_nodes == 3


def test_edges_errors_carry_line(tmp_path):
    p = _write(tmp_path, "e.csv", "0,1\n1,x\n")
    with pytest.raises(ParseError, match=r"e\.csv:2:") as ei:
        read_edges(p)
    assert ei.value.line == 2
    with pytest.raises(ParseError, match=r":1: expected 2 node ids"):
        read_edges(_write(tmp_path, "f.csv", "0,1,2\n"))
    with pytest.raises(ParseError, match="no edges"):
        read_edges(_write(tmp_path, "g.csv", "# nothing\n"))
    with pytest.raises(ParseError, match="cannot read"):
        read_edges(tmp_path / "missing.csv")
    with pytest.raises(ParseError):
        read_edges(_write(tmp_path, "h.csv", "0,1\n1,0\n"))


def test_cells_round_trip(tmp_path, square_diag):
    cx = build_b2(square_diag, [(0, 2, 3), (0, 1, 2)])
    write_edges(tmp_path / "e.csv", square_diag)
    write_cells(tmp_path / "c.csv", cx)
    sk = read_edges(tmp_path / "e.csv")
    cx2 = read_cells(tmp_path / "c.csv", sk)
    np.testing.assert_array_equal(cx2.B2, cx.B2)
    with pytest.raises(ParseError, match=":1: a cell needs"):
        read_cells(_write(tmp_path, "bad.csv", "0,1\n"), sk)
    with pytest.raises(ParseError):
        read_cells(_write(tmp_path, "bad2.csv", "0,1,3\n"), sk)


def test_complex_json_round_trip(tmp_path):
    cx = grid_complex(3, 4, holes=[(0, 1)], num_diagonals=2, seed=1).complex
    write_complex(tmp_path / "c.json", cx)
    cx2 = read_complex(tmp_path / "c.json")
    np.testing.assert_array_equal(cx2.B1, cx.B1)
    np.testing.assert_array_equal(cx2.B2, cx.B2)
    write_complex(tmp_path / "d.json", cx2)
    assert (tmp_path / "c.json").read_bytes() == (tmp_path / "d.json").read_bytes()


def test_complex_json_mismatch(tmp_path):
    cx = grid_complex(3, 3).complex
    d = complex_to_dict(cx)
    d["B2"][0][0] = -d["B2"][0][0] or 1
    write_json(tmp_path / "c.json", d)
    with pytest.raises(ParseError, match="B2"):
        read_complex(tmp_path / "c.json")
    d = complex_to_dict(cx)
    d["num_nodes"] += 1
    write_json(tmp_path / "n.json", d)
    with pytest.raises(ParseError, match="num_nodes"):
        read_complex(tmp_path / "n.json")
    with pytest.raises(ParseError, match=r"bad\.json:2:"):
        read_json(_write(tmp_path, "bad.json", "{\n  oops\n}"))


def test_matrix_and_signal(tmp_path):
    p = _write(tmp_path, "m.csv", "a,b\n1,2\n3.5,-1e-3\n")
    np.testing.assert_array_equal(read_matrix(p), [[1, 2], [3.5, -1e-3]])
    with pytest.raises(ParseError, match="expected 3 rows"):
        read_matrix(p, rows=3)
    with pytest.raises(ParseError, match=":2: expected 2 columns"):
        read_matrix(_write(tmp_path, "r.csv", "1,2\n3\n"))
    with pytest.raises(ParseError, match="one value per line"):
        read_signal(p)
    x = np.array([0.1, 1 / 3, -2e-300, 12345.678])
    write_signal(tmp_path / "x.csv", x)
    np.testing.assert_array_equal(read_signal(tmp_path / "x.csv", 4), x)


def test_samples_round_trip(tmp_path):
    write_samples(tmp_path / "s.csv", [4, 0, 2], [0.5, -1 / 7, 3.0])
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "edge_index,value"
    idx, val = read_samples(tmp_path / "s.csv")
    assert idx.tolist() == [4, 0, 2]
    assert val.tolist() == [0.5, -1 / 7, 3.0]
    with pytest.raises(ParseError, match=":2: bad sample"):
        read_samples(_write(tmp_path, "b.csv", "edge_index,value\n1.5,2\n"))


def test_write_table_formats(tmp_path):
    write_table(tmp_path / "t.csv", {"i": [1, 2], "v": [0.1, 2.0], "s": ["a", "b"]})
    assert (tmp_path / "t.csv").read_text() == "i,v,s\n1,0.10000000000000001,a\n2,2,b\n"
    with pytest.raises(ValueError):
        write_table(tmp_path / "u.csv", {"a": [1], "b": [1, 2]})
