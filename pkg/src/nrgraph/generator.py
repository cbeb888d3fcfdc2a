"""The conditionally Poissonian multigraph G_N and its two samplers.

Given capacities, the unordered pair ``{i, j}`` (loops included) carries a
Poisson(``Lambda_i * Lambda_j / L_N``) number of parallel edges, independently
over pairs. :func:`generate_exact` draws every pair directly and serves as the
oracle; :func:`generate_fast` draws the same law in time linear in ``N`` plus
the number of edges.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np

from nrgraph.capacity import CapacitySequence, selection_distribution
from nrgraph.rng import STREAM_EDGES, substream

EXACT_DEFAULT_CAP = 5000

# Mean loop count on {i, i} is LOOP_RATE_FACTOR * Lambda_i**2 / L_N.
LOOP_RATE_FACTOR = 1.0
# Vertices whose top-up loop rate is at or below this are skipped. Zero keeps
# the fast sampler exact; vectorised Poisson draws make the full pass cheap.
LOOP_TOPUP_FLOOR = 0.0

_HEADER_RE = re.compile(r"^NRGRAPH v1 N=(\d+) tau=(\S+) seed=(\S+)$")


@dataclass(frozen=True)
class MultiGraph:
    """Undirected multigraph in symmetric CSR form.

    Row ``i`` of (``indptr``, ``indices``, ``mult``) lists the distinct
    neighbours of ``i`` in increasing order with their edge multiplicities.
    A loop on ``i`` appears once, as ``i`` in its own row.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    mult: np.ndarray
    edge_total: int

    def __post_init__(self):
        for name in ("indptr", "indices", "mult"):
            getattr(self, name).flags.writeable = False

    @classmethod
    def from_pairs(cls, n: int, u, v, m) -> "MultiGraph":
        """Build from distinct unordered pairs ``u <= v`` with multiplicities ``m``."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64)
        if u.size and (np.any(u > v) or u.min() < 0 or v.max() >= n):
            raise ValueError("pairs must satisfy 0 <= u <= v < n")
        if np.any(m < 1):
            raise ValueError("multiplicities must be positive")
        loop = u == v
        edge_total = int(m.sum())
        # both directions for proper edges, one entry for loops
        src = np.concatenate([u, v[~loop]])
        dst = np.concatenate([v, u[~loop]])
        mm = np.concatenate([m, m[~loop]])
        order = np.lexsort((dst, src))
        src, dst, mm = src[order], dst[order], mm[order]
        if src.size > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if np.any(dup):
                raise ValueError("duplicate pair in edge list")
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return cls(
            n=int(n),
            indptr=indptr,
            indices=dst.astype(np.int32),
            mult=mm.astype(np.int32),
            edge_total=edge_total,
        )

    @classmethod
    def empty(cls, n: int) -> "MultiGraph":
        e = np.empty(0, dtype=np.int64)
        return cls.from_pairs(n, e, e, e)

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def multiplicities(self, i: int) -> np.ndarray:
        return self.mult[self.indptr[i]:self.indptr[i + 1]]

    def pairs(self):
        """Distinct unordered pairs ``(u, v, m)`` with ``u <= v``, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.indptr))
        dst = self.indices.astype(np.int64)
        keep = src <= dst
        return src[keep], dst[keep], self.mult[keep].astype(np.int64)

    def multiplicity(self, i: int, j: int) -> int:
        nbrs = self.neighbors(i)
        k = np.searchsorted(nbrs, j)
        if k < nbrs.size and nbrs[k] == j:
            return int(self.multiplicities(i)[k])
        return 0

    def degrees(self) -> np.ndarray:
        """Degree of every vertex, loops counted twice."""
        src = np.repeat(np.arange(self.n), np.diff(self.indptr))
        w = self.mult.astype(np.int64) * np.where(self.indices == src, 2, 1)
        return np.bincount(src, weights=w, minlength=self.n).astype(np.int64)

    def audit(self) -> None:
        """Raise ``AssertionError`` if a structural invariant is broken."""
        n = self.n
        assert self.indptr.shape == (n + 1,) and self.indptr[0] == 0
        assert self.indptr[-1] == self.indices.size == self.mult.size
        assert np.all(self.mult >= 1)
        src = np.repeat(np.arange(n, dtype=np.int64), np.diff(self.indptr))
        dst = self.indices.astype(np.int64)
        if src.size:
            assert dst.min() >= 0 and dst.max() < n
            key = src * n + dst
            assert np.all(np.diff(key) > 0), "rows must be strictly increasing"
            rev = np.searchsorted(key, dst * n + src)
            assert np.all(rev < key.size) and np.all(key[rev] == dst * n + src), "asymmetric"
            assert np.all(self.mult[rev] == self.mult), "asymmetric multiplicity"
        loops = src == dst
        half = int(self.mult[~loops].sum())
        assert half % 2 == 0
        assert self.edge_total == half // 2 + int(self.mult[loops].sum())

    # -- edge-list files ---------------------------------------------------

    def save_edgelist(self, path, tau: float, seed) -> None:
        u, v, m = self.pairs()
        with open(path, "w") as fh:
            fh.write(f"NRGRAPH v1 N={self.n} tau={float(tau)!r} seed={seed}\n")
            for a, b, c in zip(u.tolist(), v.tolist(), m.tolist()):
                fh.write(f"{a} {b} {c}\n")

    @classmethod
    def load_edgelist(cls, path):
        """Return ``(graph, header)`` with header keys ``n``, ``tau``, ``seed``."""
        with open(path) as fh:
            first = fh.readline().rstrip("\n")
            match = _HEADER_RE.match(first)
            if not match:
                raise ValueError(f"not an NRGRAPH v1 file: {first!r}")
            n = int(match.group(1))
            header = {"n": n, "tau": float(match.group(2)), "seed": match.group(3)}
            if header["seed"].isdigit():
                header["seed"] = int(header["seed"])
            rest = fh.read()
        body = np.loadtxt(io.StringIO(rest), dtype=np.int64, ndmin=2) if rest.strip() else np.empty((0, 3))
        if body.size == 0:
            return cls.empty(n), header
        return cls.from_pairs(n, body[:, 0], body[:, 1], body[:, 2]), header


def degree(graph: MultiGraph, i: int) -> int:
    """Sum of incident multiplicities, loops counted twice."""
    if not 0 <= i < graph.n:
        raise IndexError(f"vertex {i} out of range for n={graph.n}")
    lo, hi = graph.indptr[i], graph.indptr[i + 1]
    nbrs = graph.indices[lo:hi]
    m = graph.mult[lo:hi].astype(np.int64)
    return int(m.sum() + m[nbrs == i].sum())


def generate_exact(caps: CapacitySequence, seed: int, max_n: int = EXACT_DEFAULT_CAP,
                   override: bool = False) -> MultiGraph:
    """Draw every pair multiplicity independently; O(N^2)."""
    n = caps.n
    if n > max_n and not override:
        raise ValueError(f"generate_exact refuses N={n} > {max_n}; pass override=True")
    rng = substream(seed, STREAM_EDGES)
    lam = caps.values
    iu, ju = np.triu_indices(n, k=1)
    off = rng.poisson(lam[iu] * lam[ju] / caps.total)
    loops = rng.poisson(LOOP_RATE_FACTOR * lam * lam / caps.total)
    u = np.concatenate([iu, np.arange(n)])
    v = np.concatenate([ju, np.arange(n)])
    m = np.concatenate([off, loops])
    keep = m > 0
    order = np.lexsort((v[keep], u[keep]))
    return MultiGraph.from_pairs(n, u[keep][order], v[keep][order], m[keep][order])


def generate_fast(caps: CapacitySequence, seed: int, selection=None) -> MultiGraph:
    """Poisson(L_N/2) edges with i.i.d. q_N endpoints, plus a loop top-up.

    Two independent q_N endpoints hit ``{i, j}`` (``i != j``) with probability
    ``2 q_i q_j``, so thinning gives Poisson(Lambda_i Lambda_j / L_N) per pair.
    Loops arise at rate ``Lambda_i**2 / (2 L_N)``; an independent top-up of the
    same rate brings them to the exact generator's rate.
    """
    n = caps.n
    sel = selection if selection is not None else selection_distribution(caps)
    rng = substream(seed, STREAM_EDGES)
    m_edges = int(rng.poisson(caps.total / 2.0))
    a = sel.sample(rng, m_edges)
    b = sel.sample(rng, m_edges)
    rate = (LOOP_RATE_FACTOR - 0.5) * caps.values * caps.values / caps.total
    topup = np.zeros(n, dtype=np.int64)
    eligible = rate > LOOP_TOPUP_FLOOR
    topup[eligible] = rng.poisson(rate[eligible])
    u = np.minimum(a, b)
    v = np.maximum(a, b)
    keys = u * n + v
    loop_ids = np.repeat(np.arange(n, dtype=np.int64), topup)
    keys = np.concatenate([keys, loop_ids * n + loop_ids])
    uniq, counts = np.unique(keys, return_counts=True)
    return MultiGraph.from_pairs(n, uniq // n, uniq % n, counts)
