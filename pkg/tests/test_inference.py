import numpy as np
import pytest
from hypothesis import given, strategies as st

from cellsp.complex import build_b2, enumerate_candidate_cells, build_skeleton
from cellsp.generators import grid_complex
from cellsp.inference import (
    ConvergenceError,
    basis_pursuit,
    best_residual_by_sparsity,
    curl_energies,
    dictionaries,
    infer_cells,
    inferred_complex,
    line_graph_laplacian,
    simplicial_laplacian,
    sparsity_count,
    sparsity_error_curve,
    sweep_q_star,
)
from cellsp.spectral import HARMONIC, SOLENOIDAL, spectral_basis, project_sol_harm

from oracles import bp_exhaustive


def _two_hole(seed=0):
    g = grid_complex(5, 6, holes=[(1, 1), (2, 3)], seed=seed)
    return g.complex


def _observations(cx, M, rng, noise=0.0):
    """Harmonic flows of ``cx`` plus random gradients."""
    UH = spectral_basis(cx).vectors(HARMONIC)
    X = UH @ rng.standard_normal((UH.shape[1], M)) + cx.B1.T @ rng.standard_normal((cx.skeleton.num_nodes, M))
    return X + noise * rng.standard_normal(X.shape)


def test_curl_vanishes_on_filled_cells(rng):
    cx = _two_hole()
    sk = cx.skeleton
    cand = enumerate_candidate_cells(sk, 4)
    X = _observations(cx, 3, rng)
    d = curl_energies(project_sol_harm(X, sk), cand)
    filled = {c.node_cycle for c in cx.cells}
    for c, dn in zip(cand, d):
        # direct circulation sum around the cycle
        circ = c.boundary_chain @ project_sol_harm(X, sk)
        assert dn == pytest.approx(float(circ @ circ), abs=1e-12)
        if c.node_cycle in filled:
            assert dn < 1e-20
        else:
            assert dn > 1e-3


def test_noiseless_recovery(rng):
    cx = _two_hole()
    cand = enumerate_candidate_cells(cx.skeleton, 4)
    X = _observations(cx, 5, rng)
    res = infer_cells(X, cx.skeleton, cand, cx.num_cells)
    got = {cand[i].node_cycle for i in res.selected}
    assert got == {c.node_cycle for c in cx.cells}
    assert inferred_complex(cx.skeleton, cand, res).num_cells == cx.num_cells


def test_gate_on_pure_gradients(rng):
    cx = _two_hole()
    cand = enumerate_candidate_cells(cx.skeleton, 4)
    X = cx.B1.T @ rng.standard_normal((cx.skeleton.num_nodes, 4))
    res = infer_cells(X, cx.skeleton, cand, 5)
    assert res.gated and res.q_star == 0 and not res.q.any()


def test_infer_rejects_bad_qstar():
    cx = _two_hole()
    cand = enumerate_candidate_cells(cx.skeleton, 4)
    with pytest.raises(ValueError):
        infer_cells(np.ones(cx.skeleton.num_edges), cx.skeleton, cand, len(cand) + 1)


def test_sweep_finds_true_count(rng):
    cx = _two_hole()
    cand = enumerate_candidate_cells(cx.skeleton, 4)
    X = _observations(cx, 20, rng, noise=1e-4)
    sw = sweep_q_star(X, cx.skeleton, cand, seed=1)
    assert sw.q_star == cx.num_cells
    assert np.all(np.diff(sw.train_error) >= 0)


def test_atom_recovery():
    cx = _two_hole()
    V = spectral_basis(cx).eigenvectors
    rep = basis_pursuit(V[:, 7], V, 1e-9)
    assert rep.sparsity == 1
    assert rep.coefficients[7] == pytest.approx(1.0, abs=1e-8)


def test_large_epsilon_gives_zero():
    cx = _two_hole()
    V = spectral_basis(cx).eigenvectors
    x = V[:, 2] + V[:, 3]
    rep = basis_pursuit(x, V, np.linalg.norm(x))
    assert rep.sparsity == 0 and not rep.coefficients.any()


def test_two_atoms_shrink_uniformly():
    # for orthonormal V both coefficients shrink by epsilon / sqrt(2)
    cx = _two_hole()
    V = spectral_basis(cx).eigenvectors
    eps = 1e-6
    rep = basis_pursuit(2 * V[:, 4] + 0.5 * V[:, 9], V, eps)
    assert rep.sparsity == 2
    assert rep.coefficients[4] == pytest.approx(2 - eps / np.sqrt(2), abs=1e-12)
    assert rep.coefficients[9] == pytest.approx(0.5 - eps / np.sqrt(2), abs=1e-12)
    assert rep.residual <= eps + 1e-14 * 2.1


def test_bp_errors():
    V = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 3)))[0]
    x = np.ones(6)
    with pytest.raises(ValueError, match="infeasible"):
        basis_pursuit(x, V, 1e-3)
    with pytest.raises(ValueError, match="orthonormal"):
        basis_pursuit(x, 2 * V, 10.0)
    # epsilon covering the out-of-span energy is feasible
    out = np.sqrt(x @ x - np.sum((V.T @ x) ** 2))
    rep = basis_pursuit(x, V, out * 1.01)
    assert rep.residual <= out * 1.01 * (1 + 1e-9)
    with pytest.raises(ConvergenceError) as ei:
        W = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 6)))[0]
        y = np.random.default_rng(1).standard_normal(6)
        basis_pursuit(y, W, 0.1 * np.linalg.norm(y), max_iter=2)
    assert ei.value.iterations == 2


@given(st.integers(3, 10), st.integers(0, 2**31 - 1), st.floats(0.0, 0.9))
def test_bp_matches_exhaustive(E, seed, frac):
    rng = np.random.default_rng(seed)
    V = np.linalg.qr(rng.standard_normal((E, E)))[0]
    x = V @ (rng.standard_normal(E) * (rng.random(E) < 0.5)) + 0.01 * rng.standard_normal(E)
    eps = frac * np.linalg.norm(x)
    rep = basis_pursuit(x, V, eps)
    ref, _ = bp_exhaustive(x, V, eps)
    assert np.abs(rep.coefficients).sum() == pytest.approx(ref, abs=1e-7 * max(1.0, ref))
    assert rep.residual <= eps * (1 + 1e-8) + 1e-12


def test_sparsity_count():
    assert sparsity_count(np.array([1.0, 1e-7, 0.0, -0.5])) == 2
    assert sparsity_count(np.zeros(3)) == 0


def test_line_graph_laplacian_matches_networkx():
    nx = pytest.importorskip("networkx")
    g = nx.petersen_graph()
    sk = build_skeleton(g.edges())
    L1d = (sk.B1.T @ sk.B1).astype(float)
    Lg = line_graph_laplacian(L1d)
    lg = nx.line_graph(nx.Graph(list(sk.edges)))
    lg = nx.relabel_nodes(lg, {v: tuple(sorted(v)) for v in lg})
    ref = nx.laplacian_matrix(lg, nodelist=list(sk.edges)).toarray()
    np.testing.assert_array_equal(Lg, ref)


def test_simplicial_fills_triangles(square_diag):
    cx = build_b2(square_diag, [(0, 1, 2), (0, 2, 3)])
    L = (cx.B1.T @ cx.B1 + cx.B2 @ cx.B2.T).astype(float)
    np.testing.assert_array_equal(simplicial_laplacian(square_diag), L)


def test_cell_dictionary_reaches_zero_where_graph_does_not(rng):
    cx = _two_hole()
    b = spectral_basis(cx)
    idx = np.r_[b.indices(SOLENOIDAL)[:3], b.indices(HARMONIC)[:2]]
    x = b.eigenvectors[:, idx] @ (1 + rng.random(5))
    eps = np.linalg.norm(x) * np.r_[0.0, np.geomspace(1e-8, 0.9, 25)]
    rows = sparsity_error_curve(x, dictionaries(cx), eps)
    cell = best_residual_by_sparsity(rows, "cell", 5)
    graph = best_residual_by_sparsity(rows, "graph", 5)
    assert cell[5] < 1e-8 * np.linalg.norm(x)
    assert graph[5] > 1e-2 * np.linalg.norm(x)


def test_curve_rows_ordered(rng):
    cx = _two_hole()
    x = rng.standard_normal(cx.skeleton.num_edges)
    rows = sparsity_error_curve(x, dictionaries(cx)[:2], [0.5, 0.0, 1.0])
    assert [r[0] for r in rows] == ["cell"] * 3 + ["simplicial"] * 3
    assert [r[1] for r in rows[:3]] == [0.0, 0.5, 1.0]
    # sparsity falls as epsilon grows
    assert rows[0][2] >= rows[1][2] >= rows[2][2]
