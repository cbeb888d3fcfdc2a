"""Pareto capacities, the size-biased law and the vertex-selection law q_N.

Capacities are i.i.d. with ``P(Lambda > x) = x**-(tau - 1)`` on ``[1, inf)``.
Vertices are numbered ``0 .. n-1`` throughout the package.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

from nrgraph.rng import STREAM_CAPACITIES, substream

BINARY_MAGIC = b"NR"
BINARY_VERSION = 1
_HEADER = struct.Struct("<2sHId")  # magic, version, N, tau -> 16 bytes


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 2.0 < tau < 3.0:
        raise ValueError(f"tau must lie in (2, 3), got {tau}")
    return tau


def pareto_quantile(u, tau: float):
    """Inverse of the capacity tail: the ``x`` with ``x**-(tau-1) == u``.

    Accepts a scalar or an array of ``u`` values in ``(0, 1]``.
    """
    tau = _check_tau(tau)
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise ValueError("u must lie in (0, 1]")
    out = arr ** (-1.0 / (tau - 1.0))
    return float(out) if out.ndim == 0 else out


def mean_capacity(tau: float) -> float:
    """Exact mean ``(tau-1)/(tau-2)`` of the capacity law."""
    tau = _check_tau(tau)
    return (tau - 1.0) / (tau - 2.0)


def size_biased_tail(x, tau: float):
    """Tail ``P(Gamma > x) = x**-(tau-2)`` of the size-biased capacity."""
    tau = _check_tau(tau)
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr >= 1.0)):
        raise ValueError("x must be >= 1")
    out = arr ** (-(tau - 2.0))
    return float(out) if out.ndim == 0 else out


def size_biased_quantile(u, tau: float):
    """Inverse of :func:`size_biased_tail`: returns ``u**(-1/(tau-2))``."""
    tau = _check_tau(tau)
    arr = np.asarray(u, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(arr > 1.0):
        raise ValueError("u must lie in (0, 1]")
    out = arr ** (-1.0 / (tau - 2.0))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CapacitySequence:
    """I.i.d. capacities ``values`` with their sum ``total`` (L_N)."""

    values: np.ndarray
    total: float
    tau: float
    n: int

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != self.n:
            raise ValueError("values must be a vector of length n")
        if self.n < 1:
            raise ValueError("n must be positive")
        if np.any(~(values >= 1.0)):
            raise ValueError("capacities must be >= 1")
        _check_tau(self.tau)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values, tau: float) -> "CapacitySequence":
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, total=float(math.fsum(values)), tau=float(tau), n=int(values.size))

    def __len__(self) -> int:
        return self.n

    def max_index(self) -> int:
        """Index of the largest capacity, smallest index on ties."""
        return int(np.argmax(self.values))

    # -- persistence -------------------------------------------------------

    def save_binary(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, self.n, self.tau))
            fh.write(self.values.astype("<f8").tobytes())

    @classmethod
    def load_binary(cls, path) -> "CapacitySequence":
        data = Path(path).read_bytes()
        if len(data) < _HEADER.size:
            raise ValueError("truncated capacity file")
        magic, version, n, tau = _HEADER.unpack_from(data)
        if magic != BINARY_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != BINARY_VERSION:
            raise ValueError(f"unsupported capacity file version {version}")
        body = data[_HEADER.size:]
        if len(body) != 8 * n:
            raise ValueError(f"expected {n} capacities, file holds {len(body) // 8}")
        return cls.from_values(np.frombuffer(body, dtype="<f8"), tau)

    def save_text(self, path) -> None:
        """Debug export, one capacity per line."""
        with open(path, "w") as fh:
            for v in self.values:
                fh.write(f"{float(v)!r}\n")

    @classmethod
    def load_text(cls, path, tau: float) -> "CapacitySequence":
        return cls.from_values(np.loadtxt(path, dtype=np.float64, ndmin=1), tau)


def sample_capacities(n: int, tau: float, seed: int) -> CapacitySequence:
    """Draw ``n`` i.i.d. capacities from the capacities substream of ``seed``."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    tau = _check_tau(tau)
    rng = substream(seed, STREAM_CAPACITIES)
    # 1 - U lies in (0, 1]
    u = 1.0 - rng.random(n)
    return CapacitySequence.from_values(pareto_quantile(u, tau), tau)


@numba.njit(cache=True)
def _vose_tables(weights):
    n = weights.size
    scaled = weights * n
    prob = np.ones(n)
    alias = np.arange(n)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    # leftovers are 1 up to rounding
    return prob, alias


@dataclass(frozen=True)
class SelectionDistribution:
    """The law ``q_N(j) = Lambda_j / L_N`` with a Vose alias table."""

    weights: np.ndarray
    prob: np.ndarray
    alias: np.ndarray

    @property
    def n(self) -> int:
        return self.weights.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` i.i.d. vertex ids (int64) using ``rng``."""
        n = self.weights.size
        cols = rng.integers(0, n, size=size)
        coin = rng.random(size)
        return np.where(coin < self.prob[cols], cols, self.alias[cols])


def selection_distribution(caps: CapacitySequence) -> SelectionDistribution:
    weights = caps.values / caps.total
    prob, alias = _vose_tables(weights.copy())
    for arr in (weights, prob, alias):
        arr.flags.writeable = False
    return SelectionDistribution(weights=weights, prob=prob, alias=alias)
