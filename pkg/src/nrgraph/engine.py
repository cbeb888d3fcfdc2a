"""Components, hop distances, neighbourhood shells and induced subgraphs.

All routines treat the multigraph as simple: a pair is adjacent when its
multiplicity is at least one, and loops never matter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from nrgraph.generator import MultiGraph
from nrgraph.rng import STREAM_PAIRS, substream

UNREACHABLE = -1
DIAMETER_DEFAULT_CAP = 100_000


@dataclass(frozen=True)
class ComponentLabeling:
    label: np.ndarray
    sizes: np.ndarray
    giant_id: int

    @property
    def giant_size(self) -> int:
        return int(self.sizes[self.giant_id]) if self.sizes.size else 0

    def giant_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.label == self.giant_id)


@dataclass(frozen=True)
class ShellSequence:
    """``shells[k]`` is the sorted array of vertices at hop distance ``k``."""

    shells: list

    @property
    def sizes(self) -> list[int]:
        return [int(s.size) for s in self.shells]


@dataclass(frozen=True)
class InducedSubgraph:
    """``graph`` on ``old_ids.size`` vertices; ``new_ids[old]`` is -1 if dropped."""

    graph: MultiGraph
    old_ids: np.ndarray
    new_ids: np.ndarray


def _adjacency(graph: MultiGraph) -> csr_matrix:
    data = np.ones(graph.indices.size, dtype=np.int8)
    return csr_matrix((data, graph.indices, graph.indptr), shape=(graph.n, graph.n))


def connected_components(graph: MultiGraph) -> ComponentLabeling:
    if graph.n == 0:
        empty = np.empty(0, dtype=np.int64)
        return ComponentLabeling(label=empty, sizes=empty, giant_id=-1)
    _, label = _cc(_adjacency(graph), directed=False)
    label = label.astype(np.int64)
    sizes = np.bincount(label)
    return ComponentLabeling(label=label, sizes=sizes, giant_id=int(np.argmax(sizes)))


@numba.njit(cache=True)
def _bfs(indptr, indices, source, target, max_depth):
    n = indptr.size - 1
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    dist[source] = 0
    queue[0] = source
    head = 0
    tail = 1
    while head < tail:
        x = queue[head]
        head += 1
        d = dist[x]
        if d == max_depth:
            continue
        for k in range(indptr[x], indptr[x + 1]):
            y = indices[k]
            if dist[y] < 0:
                dist[y] = d + 1
                if y == target:
                    return dist
                queue[tail] = y
                tail += 1
    return dist


@numba.njit(cache=True)
def _expand_level(indptr, indices, dist, queue, lo, hi, other):
    # Labels the next level of one side; returns (new_hi, hit). A hit on a
    # vertex labelled by the other side ends the search: while the two balls
    # are disjoint, every such hit has the same, minimal, length.
    tail = hi
    for q in range(lo, hi):
        x = queue[q]
        d = dist[x] + 1
        for k in range(indptr[x], indptr[x + 1]):
            y = indices[k]
            if other[y] >= 0:
                return tail, d + other[y]
            if dist[y] < 0:
                dist[y] = d
                queue[tail] = y
                tail += 1
    return tail, -1


@numba.njit(cache=True)
def _pair_distances(indptr, indices, src, dst):
    n = indptr.size - 1
    out = np.empty(src.size, dtype=np.int64)
    da = np.full(n, -1, dtype=np.int32)
    db = np.full(n, -1, dtype=np.int32)
    qa = np.empty(n, dtype=np.int64)
    qb = np.empty(n, dtype=np.int64)
    for p in range(src.size):
        s = src[p]
        t = dst[p]
        if s == t:
            out[p] = 0
            continue
        da[s] = 0
        db[t] = 0
        qa[0] = s
        qb[0] = t
        alo, ahi, blo, bhi = 0, 1, 0, 1
        found = -1
        while found < 0 and alo < ahi and blo < bhi:
            # grow the side whose frontier has fewer incident edges
            wa = 0
            for q in range(alo, ahi):
                wa += indptr[qa[q] + 1] - indptr[qa[q]]
            wb = 0
            for q in range(blo, bhi):
                wb += indptr[qb[q] + 1] - indptr[qb[q]]
            if wa <= wb:
                tail, found = _expand_level(indptr, indices, da, qa, alo, ahi, db)
                alo, ahi = ahi, tail
            else:
                tail, found = _expand_level(indptr, indices, db, qb, blo, bhi, da)
                blo, bhi = bhi, tail
        out[p] = found
        for q in range(ahi):
            da[qa[q]] = -1
        for q in range(bhi):
            db[qb[q]] = -1
    return out


@numba.njit(cache=True)
def _max_eccentricity(indptr, indices, sources):
    n = indptr.size - 1
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    best = 0
    for s in sources:
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            x = queue[head]
            head += 1
            d = dist[x]
            if d > best:
                best = d
            for k in range(indptr[x], indptr[x + 1]):
                y = indices[k]
                if dist[y] < 0:
                    dist[y] = d + 1
                    queue[tail] = y
                    tail += 1
        for q in range(tail):
            dist[queue[q]] = -1
    return best


def _check_vertex(graph: MultiGraph, v: int) -> int:
    v = int(v)
    if not 0 <= v < graph.n:
        raise IndexError(f"vertex {v} out of range for n={graph.n}")
    return v


def bfs_distances(graph: MultiGraph, source: int) -> np.ndarray:
    """Hop distance from ``source`` to every vertex; ``UNREACHABLE`` if none."""
    source = _check_vertex(graph, source)
    return _bfs(graph.indptr, graph.indices, source, -1, -1)


def pair_distances(graph: MultiGraph, src, dst) -> np.ndarray:
    """Exact hop distances for each pair ``(src[k], dst[k])``."""
    src = np.ascontiguousarray(src, dtype=np.int64)
    dst = np.ascontiguousarray(dst, dtype=np.int64)
    return _pair_distances(graph.indptr, graph.indices, src, dst)


def sample_giant_pairs(labeling: ComponentLabeling, pair_count: int, rng: np.random.Generator):
    """Ordered pairs of distinct giant vertices, uniform, with replacement."""
    giant = labeling.giant_vertices()
    if giant.size < 2:
        raise ValueError("giant component has fewer than 2 vertices")
    a = rng.integers(0, giant.size, size=pair_count)
    b = rng.integers(0, giant.size - 1, size=pair_count)
    b = b + (b >= a)  # uniform over the other giant vertices
    return giant[a], giant[b]


def sample_giant_distances(graph: MultiGraph, labeling: ComponentLabeling, pair_count: int,
                           seed: int, stream_keys: tuple = ()) -> np.ndarray:
    rng = substream(seed, STREAM_PAIRS, *stream_keys)
    src, dst = sample_giant_pairs(labeling, int(pair_count), rng)
    return pair_distances(graph, src, dst)


def neighborhood_shells(graph: MultiGraph, i0: int, max_depth: int) -> ShellSequence:
    """Shells ``N_0 = {i0}``, ``N_{k+1}`` = new vertices adjacent to ``N_k``."""
    i0 = _check_vertex(graph, i0)
    dist = _bfs(graph.indptr, graph.indices, i0, -1, int(max_depth))
    reached = np.flatnonzero(dist >= 0)
    depth = dist[reached]
    order = np.argsort(depth, kind="stable")
    reached, depth = reached[order], depth[order]
    bounds = np.searchsorted(depth, np.arange(int(depth.max()) + 2))
    shells = [reached[bounds[k]:bounds[k + 1]] for k in range(bounds.size - 1)]
    return ShellSequence(shells=shells)


def induced_subgraph(graph: MultiGraph, keep) -> InducedSubgraph:
    keep = np.asarray(keep)
    if keep.dtype == bool:
        mask = keep.copy()
    else:
        mask = np.zeros(graph.n, dtype=bool)
        mask[keep.astype(np.int64)] = True
    old_ids = np.flatnonzero(mask)
    new_ids = np.full(graph.n, -1, dtype=np.int64)
    new_ids[old_ids] = np.arange(old_ids.size)
    src = np.repeat(np.arange(graph.n, dtype=np.int64), np.diff(graph.indptr))
    dst = graph.indices.astype(np.int64)
    ok = mask[src] & mask[dst] & (src <= dst)
    u, v = new_ids[src[ok]], new_ids[dst[ok]]
    sub = MultiGraph.from_pairs(old_ids.size, u, v, graph.mult[ok])
    return InducedSubgraph(graph=sub, old_ids=old_ids, new_ids=new_ids)


def exact_component_diameter(graph: MultiGraph, labeling: ComponentLabeling | None = None,
                             max_vertices: int = DIAMETER_DEFAULT_CAP) -> int:
    """Largest eccentricity inside the largest component (all-sources BFS)."""
    if graph.n > max_vertices:
        raise ValueError(f"graph has {graph.n} vertices, above the diameter cap {max_vertices}")
    if graph.n == 0:
        return 0
    labeling = labeling or connected_components(graph)
    return int(_max_eccentricity(graph.indptr, graph.indices, labeling.giant_vertices()))
