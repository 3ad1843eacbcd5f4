"""Combinatorial data model: skeleton, 2-cells, incidence matrices, Laplacians."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from . import _backend

INDEPENDENCE_TOL = 1e-10


class ComplexError(ValueError):
    """Base class for invalid complex input."""


class DuplicateEdgeError(ComplexError):
    pass


class SelfLoopError(ComplexError):
    pass


class DisconnectedError(ComplexError):
    pass


class InvalidCellError(ComplexError):
    """A cell's node cycle is not a cycle of the skeleton."""


class DependentCellsError(ComplexError):
    """Boundary chains of the supplied cells are linearly dependent."""


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Oriented, connected 1-skeleton.

    Edges are stored with ``tail < head`` and keep the order of the input
    list, so edge ``e`` is column ``e`` of ``B1``.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    B1: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {e: i for i, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        """Symmetric node adjacency in CSR form with sorted indices."""
        t = np.array([e[0] for e in self.edges], dtype=np.int64)
        h = np.array([e[1] for e in self.edges], dtype=np.int64)
        A = sp.coo_matrix(
            (np.ones(2 * len(t)), (np.r_[t, h], np.r_[h, t])),
            shape=(self.num_nodes, self.num_nodes),
        ).tocsr()
        A.sort_indices()
        return A

    def chain(self, node_cycle: Sequence[int]) -> np.ndarray:
        """Signed edge chain of a closed traversal."""
        c = np.zeros(self.num_edges, dtype=np.int64)
        k = len(node_cycle)
        for a, b in zip(node_cycle, (node_cycle[(i + 1) % k] for i in range(k))):
            key = (a, b) if a < b else (b, a)
            idx = self.edge_index.get(key)
            if idx is None:
                raise InvalidCellError(f"({a}, {b}) is not an edge of the skeleton")
            c[idx] += 1 if a < b else -1
        return c


@dataclass(frozen=True, eq=False)
class TwoCell:
    node_cycle: tuple[int, ...]
    boundary_chain: np.ndarray

    def __len__(self):
        return len(self.node_cycle)


@dataclass(frozen=True, eq=False)
class CellComplex:
    skeleton: Skeleton
    cells: tuple[TwoCell, ...]
    B2: np.ndarray

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    @property
    def B1(self) -> np.ndarray:
        return self.skeleton.B1


@dataclass(frozen=True, eq=False)
class HodgeLaplacians:
    L0: np.ndarray
    L1_down: np.ndarray
    L1_up: np.ndarray
    L1: np.ndarray
    _sparse: dict = field(default_factory=dict, repr=False)

    def sparse(self, name: str) -> sp.csr_matrix:
        """CSR copy of one of the edge Laplacians, cached."""
        if name not in self._sparse:
            self._sparse[name] = sp.csr_matrix(getattr(self, name))
        return self._sparse[name]


def build_skeleton(edge_list: Iterable[Sequence[int]], index_base: int = 0) -> Skeleton:
    """Build an oriented skeleton from node pairs.

    Parameters
    ----------
    edge_list : iterable of (int, int)
        Undirected edges in any orientation.
    index_base : {0, 1}
        Id of the first node. Ids must be contiguous from this value.

    Raises
    ------
    SelfLoopError, DuplicateEdgeError, DisconnectedError
    """
    if index_base not in (0, 1):
        raise ValueError("index_base must be 0 or 1")
    pairs = [(int(a) - index_base, int(b) - index_base) for a, b in edge_list]
    if not pairs:
        raise ComplexError("edge list is empty")
    edges, seen = [], set()
    for line, (a, b) in enumerate(pairs):
        if a < 0 or b < 0:
            raise ComplexError(f"edge {line}: node id below index base {index_base}")
        if a == b:
            raise SelfLoopError(f"edge {line}: self-loop at node {a + index_base}")
        e = (a, b) if a < b else (b, a)
        if e in seen:
            raise DuplicateEdgeError(
                f"edge {line}: duplicate edge ({e[0] + index_base}, {e[1] + index_base})"
            )
        seen.add(e)
        edges.append(e)
    N = max(h for _, h in edges) + 1
    E = len(edges)
    B1 = np.zeros((N, E), dtype=np.int64)
    cols = np.arange(E)
    B1[[t for t, _ in edges], cols] = -1
    B1[[h for _, h in edges], cols] = 1
    sk = Skeleton(N, tuple(edges), B1)
    n_comp, _ = connected_components(sk.adjacency, directed=False)
    if n_comp != 1:
        raise DisconnectedError(f"skeleton has {n_comp} connected components")
    return sk


def default_p_max(skeleton: Skeleton) -> int:
    return 2 * math.ceil(skeleton.num_edges / skeleton.num_nodes) + 3


class _IncrementalBasis:
    """Orthonormal basis grown one vector at a time (Gram-Schmidt, twice)."""

    def __init__(self, dim: int, tol: float = INDEPENDENCE_TOL):
        self.Q = np.zeros((dim, 0))
        self.tol = tol

    @property
    def rank(self) -> int:
        return self.Q.shape[1]

    def try_add(self, v: np.ndarray) -> bool:
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return False
        r = v.copy()
        for _ in range(2):
            r -= self.Q @ (self.Q.T @ r)
        nr = np.linalg.norm(r)
        if nr <= self.tol * nv:
            return False
        self.Q = np.column_stack([self.Q, r / nr])
        return True


def simple_cycles(skeleton: Skeleton, p_max: int) -> list[tuple[int, ...]]:
    """All simple cycles of length 3..p_max, sorted by length then nodes."""
    A = skeleton.adjacency
    cyc = _backend.simple_cycles(
        A.indptr.astype(np.int64), A.indices.astype(np.int64), skeleton.num_nodes, p_max
    )
    return sorted(cyc, key=lambda c: (len(c), c))


def enumerate_candidate_cells(skeleton: Skeleton, p_max: int | None = None) -> list[TwoCell]:
    """Independent candidate 2-cells of length 3..p_max.

    Cycles are scanned by increasing length (ties lexicographic) and kept
    only when their chain is independent of everything already kept.
    """
    if p_max is None:
        p_max = default_p_max(skeleton)
    if p_max < 3:
        raise ValueError("p_max must be at least 3")
    cycle_rank = skeleton.num_edges - skeleton.num_nodes + 1
    basis = _IncrementalBasis(skeleton.num_edges)
    out = []
    for cyc in simple_cycles(skeleton, p_max):
        if basis.rank == cycle_rank:
            break
        ch = skeleton.chain(cyc)
        if basis.try_add(ch):
            out.append(TwoCell(cyc, ch))
    return out


def make_cell(skeleton: Skeleton, node_cycle: Sequence[int]) -> TwoCell:
    """Validate a node cycle and attach its boundary chain."""
    cyc = tuple(int(v) for v in node_cycle)
    if len(cyc) < 3:
        raise InvalidCellError(f"cell {cyc}: fewer than 3 nodes")
    if len(set(cyc)) != len(cyc):
        raise InvalidCellError(f"cell {cyc}: repeated node")
    return TwoCell(cyc, skeleton.chain(cyc))


def build_b2(skeleton: Skeleton, cells: Iterable[TwoCell | Sequence[int]]) -> CellComplex:
    """Assemble a cell complex from validated cells.

    Cells are stably sorted by cycle length so that ``B2`` lists triangles
    first. Accepts either ``TwoCell`` objects or raw node cycles.

    Raises
    ------
    InvalidCellError
        A cell uses a pair of nodes that is not an edge.
    DependentCellsError
        The boundary chains are linearly dependent.
    """
    cl = [c if isinstance(c, TwoCell) else make_cell(skeleton, c) for c in cells]
    cl = sorted(cl, key=len)
    E = skeleton.num_edges
    B2 = np.zeros((E, len(cl)), dtype=np.int64)
    for j, c in enumerate(cl):
        if c.boundary_chain.shape != (E,):
            raise InvalidCellError(f"cell {c.node_cycle}: chain length mismatch")
        B2[:, j] = c.boundary_chain
    if cl:
        if np.any(skeleton.B1 @ B2):
            raise InvalidCellError("a boundary chain is not closed")
        basis = _IncrementalBasis(E)
        for j, c in enumerate(cl):
            if not basis.try_add(B2[:, j]):
                raise DependentCellsError(
                    f"cell {c.node_cycle} is a combination of earlier cells"
                )
    return CellComplex(skeleton, tuple(cl), B2)


def hodge_laplacians(cx: CellComplex) -> HodgeLaplacians:
    B1 = cx.B1.astype(float)
    B2 = cx.B2.astype(float)
    L1d = B1.T @ B1
    L1u = B2 @ B2.T
    return HodgeLaplacians(B1 @ B1.T, L1d, L1u, L1d + L1u)


def harmonic_dimension(cx: CellComplex) -> int:
    """E - rank(B1) - rank(B2) by SVD rank."""
    r1 = np.linalg.matrix_rank(cx.B1.astype(float))
    r2 = np.linalg.matrix_rank(cx.B2.astype(float)) if cx.num_cells else 0
    return cx.skeleton.num_edges - int(r1) - int(r2)


def fill_all(skeleton: Skeleton, p_max: int | None = None) -> CellComplex:
    """Complex with every independent candidate cell filled."""
    return build_b2(skeleton, enumerate_candidate_cells(skeleton, p_max))
