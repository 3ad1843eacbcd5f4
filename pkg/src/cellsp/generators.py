"""Synthetic complexes: punched grids, random geometric complexes, random graphs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .complex import (
    CellComplex,
    Skeleton,
    build_b2,
    build_skeleton,
    enumerate_candidate_cells,
)
from .spectral import HARMONIC, spectral_basis


@dataclass(frozen=True, eq=False)
class GridComplex:
    """A rectangular grid complex with some faces left empty.

    ``hole_cycles`` are the node cycles bounding the empty faces and
    ``hole_edges`` the indices of the edges on those cycles.
    """

    complex: CellComplex
    rows: int
    cols: int
    hole_cycles: tuple[tuple[int, ...], ...]

    @property
    def hole_edges(self) -> np.ndarray:
        sk = self.complex.skeleton
        mask = np.zeros(sk.num_edges, dtype=bool)
        for cyc in self.hole_cycles:
            mask |= sk.chain(cyc) != 0
        return np.flatnonzero(mask)


def _pick_holes(rng, rows, cols, num_holes, separated):
    sq = [(r, c) for r in range(rows - 1) for c in range(cols - 1)]
    interior = [(r, c) for r, c in sq if 0 < r < rows - 2 and 0 < c < cols - 2]
    reach = 1 if separated else 0
    # prefer interior faces; fall back to the whole grid when they cannot fit
    for pool in (interior, sq):
        if len(pool) < num_holes:
            continue
        chosen = []
        for i in rng.permutation(len(pool)):
            r, c = pool[i]
            # squares sharing an edge are always excluded; ``separated`` also excludes corners
            clash = any(
                (abs(r - r2) + abs(c - c2) <= 1) or (reach and max(abs(r - r2), abs(c - c2)) <= 1)
                for r2, c2 in chosen
            )
            if not clash:
                chosen.append((r, c))
            if len(chosen) == num_holes:
                return chosen
    raise ValueError(f"cannot place {num_holes} holes in a {rows}x{cols} grid")


def grid_complex(
    rows: int,
    cols: int,
    num_holes: int = 0,
    num_diagonals: int = 0,
    seed: int | None = 0,
    holes: list[tuple[int, int]] | None = None,
    separated: bool = True,
) -> GridComplex:
    """Grid of ``rows x cols`` nodes with every face filled except the holes.

    Parameters
    ----------
    rows, cols : int
        Node counts along each axis (at least 2).
    num_holes : int
        Number of square faces to leave empty, chosen at random unless
        ``holes`` lists the squares by their lower-left ``(row, col)``.
    num_diagonals : int
        Number of remaining squares split into two triangles by a diagonal.
    seed : int, optional
    separated : bool
        Keep random holes from touching, even at a corner.

    Returns
    -------
    GridComplex
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 x 2 nodes")
    rng = np.random.default_rng(seed)
    nid = lambda r, c: r * cols + c  # noqa: E731
    if holes is None:
        holes = _pick_holes(rng, rows, cols, num_holes, separated) if num_holes else []
    holes = [tuple(h) for h in holes]
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((nid(r, c), nid(r, c + 1)))
            if r + 1 < rows:
                edges.append((nid(r, c), nid(r + 1, c)))
    squares = [(r, c) for r in range(rows - 1) for c in range(cols - 1)]
    hole_set = set(holes)
    free = [s for s in squares if s not in hole_set]
    if num_diagonals > len(free):
        raise ValueError("more diagonals than available squares")
    diag = set(free[i] for i in rng.choice(len(free), size=num_diagonals, replace=False))
    cells = []
    for r, c in squares:
        a, b, d, e = nid(r, c), nid(r, c + 1), nid(r + 1, c + 1), nid(r + 1, c)
        if (r, c) in hole_set:
            continue
        if (r, c) in diag:
            edges.append((a, d))
            cells += [(a, b, d), (a, d, e)]
        else:
            cells.append((a, b, d, e))
    sk = build_skeleton(edges)
    hole_cycles = tuple(
        (nid(r, c), nid(r, c + 1), nid(r + 1, c + 1), nid(r + 1, c)) for r, c in holes
    )
    return GridComplex(build_b2(sk, cells), rows, cols, hole_cycles)


def random_geometric_skeleton(
    num_nodes: int = 20, radius: float = 0.3, seed: int | None = 0, max_tries: int = 1000
) -> Skeleton:
    """Connected random geometric graph in the unit square.

    Point sets are redrawn until the disk graph is connected.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pts = rng.random((num_nodes, 2))
        D = squareform(pdist(pts))
        iu, ju = np.nonzero(np.triu(D <= radius, k=1))
        if len(iu) == 0:
            continue
        try:
            return build_skeleton(zip(iu.tolist(), ju.tolist()))
        except ValueError:
            continue
    raise RuntimeError("no connected geometric graph found; increase the radius")


def random_geometric_complex(
    num_nodes: int = 20,
    radius: float = 0.3,
    seed: int | None = 0,
    p_max: int | None = None,
    fill: float = 1.0,
) -> CellComplex:
    """Random geometric graph with a random share ``fill`` of its candidate cells filled."""
    sk = random_geometric_skeleton(num_nodes, radius, seed)
    cand = enumerate_candidate_cells(sk, p_max)
    if fill < 1.0:
        rng = np.random.default_rng(None if seed is None else seed + 1)
        keep = rng.random(len(cand)) < fill
        cand = [c for c, k in zip(cand, keep) if k]
    return build_b2(sk, cand)


def random_connected_graph(num_nodes: int, num_edges: int, seed: int | None = 0) -> Skeleton:
    """Uniformly random spanning tree plus extra random edges."""
    max_e = num_nodes * (num_nodes - 1) // 2
    if not num_nodes - 1 <= num_edges <= max_e:
        raise ValueError("edge count incompatible with a connected simple graph")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_nodes)
    edges = set()
    for i in range(1, num_nodes):
        j = int(rng.integers(i))
        a, b = int(perm[i]), int(perm[j])
        edges.add((min(a, b), max(a, b)))
    rest = [(a, b) for a in range(num_nodes) for b in range(a + 1, num_nodes) if (a, b) not in edges]
    extra = rng.choice(len(rest), size=num_edges - len(edges), replace=False)
    edges.update(rest[i] for i in extra)
    return build_skeleton(sorted(edges))


def harmonic_signal(cx: CellComplex, amplitude: float = 1.0, noise_var: float = 0.0,
                    seed: int | None = 0) -> np.ndarray:
    """Random harmonic flow ``amplitude * U_H c`` (``c ~ U[0, 1)``) plus Gaussian noise."""
    rng = np.random.default_rng(seed)
    UH = spectral_basis(cx).vectors(HARMONIC)
    x = amplitude * (UH @ rng.random(UH.shape[1]))
    if noise_var:
        x = x + np.sqrt(noise_var) * rng.standard_normal(cx.skeleton.num_edges)
    return x


def bandlimited_signal(U: np.ndarray, band, seed: int | None = 0) -> np.ndarray:
    """Standard-normal combination of the columns ``U[:, band]``."""
    rng = np.random.default_rng(seed)
    band = np.asarray(band, dtype=int)
    return U[:, band] @ rng.standard_normal(len(band))
