"""Deterministic structure of the core as a function of (N, tau).

Exponents are taken with respect to ``N``: a vertex sits at height ``g`` when
its capacity is about ``N**g``. All logarithms are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from nrgraph.capacity import CapacitySequence, _check_tau
from nrgraph.engine import InducedSubgraph, induced_subgraph
from nrgraph.generator import MultiGraph

_CEIL_SLACK = 1e-9


def _iterated_log(x: float, times: int) -> float | None:
    for _ in range(times):
        if x <= 0:
            return None
        x = math.log(x)
    return x


def ell(n: int) -> float:
    """Default slowly growing function: ``max(1, (log log log n)**0.75)``.

    Any stage of the iterated log that is not positive clips the result to 1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    x = _iterated_log(n, 3)
    if x is None or x <= 0:
        return 1.0
    return max(1.0, x ** 0.75)


def constant_ell(value: float = 1.0) -> Callable[[int], float]:
    def _ell(n: int) -> float:
        return float(value)
    _ell.__name__ = f"constant_ell({value})"
    return _ell


ELL_CHOICES = {"default": ell, "constant": constant_ell(1.0)}


def resolve_ell(choice) -> Callable[[int], float]:
    """Map ``None``, a registered name or a callable to an ``ell`` function."""
    if choice is None:
        return ell
    if callable(choice):
        return choice
    if isinstance(choice, str) and choice.startswith("constant:"):
        return constant_ell(float(choice.split(":", 1)[1]))
    try:
        return ELL_CHOICES[choice]
    except KeyError:
        raise ValueError(f"unknown ell choice {choice!r}") from None


def epsilon(n: int, ell_fn: Callable[[int], float] | None = None) -> float:
    if n < 2:
        raise ValueError("epsilon needs n >= 2")
    return (ell_fn or ell)(n) / math.log(n)


def k_star(n: int, tau: float) -> int:
    tau = _check_tau(tau)
    return math.ceil(math.log(math.log(n)) / -math.log(tau - 2.0))


def theta(tau: float) -> float:
    tau = _check_tau(tau)
    return (tau - 2.0) * (4.0 - tau) / (3.0 - tau)


def beta_sequence(eps: float, tau: float, length: int) -> list[float]:
    """``beta_0 = 1/(tau-1) + eps/(tau-2)``, ``beta_j = (tau-2) beta_{j-1} + eps``."""
    betas = [1.0 / (tau - 1.0) + eps / (tau - 2.0)]
    for _ in range(length - 1):
        betas.append((tau - 2.0) * betas[-1] + eps)
    return betas


@dataclass(frozen=True)
class CoreParameters:
    n: int
    tau: float
    ell: float
    epsilon: float
    beta: tuple
    k_star: int
    kappa: int
    theta: float

    @property
    def core_exponent(self) -> float:
        """``beta_{k*}``: the core is every vertex above ``N**beta_{k*}``."""
        return self.beta[self.k_star]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau,
            "ell": self.ell,
            "epsilon": self.epsilon,
            "beta": list(self.beta),
            "k_star": self.k_star,
            "kappa": self.kappa,
            "theta": self.theta,
            "core_exponent": self.core_exponent,
        }


def core_parameters(n: int, tau: float, ell_fn=None) -> CoreParameters:
    if n < 3:
        raise ValueError("core parameters need n >= 3")
    tau = _check_tau(tau)
    ell_fn = resolve_ell(ell_fn)
    ell_n = ell_fn(n)
    eps = ell_n / math.log(n)
    ks = k_star(n, tau)
    th = theta(tau)
    # geometric mean of N^(theta*eps) = e^(theta*ell) and k*
    kappa = math.ceil(math.sqrt(math.exp(th * ell_n) * ks))
    return CoreParameters(
        n=int(n), tau=tau, ell=ell_n, epsilon=eps,
        beta=tuple(beta_sequence(eps, tau, ks + 1)),
        k_star=ks, kappa=kappa, theta=th,
    )


def tier(caps: CapacitySequence, lo_exp: float, hi_exp: float = math.inf) -> np.ndarray:
    """Vertices with capacity in ``(N**lo_exp, N**hi_exp]``."""
    if not lo_exp < hi_exp:
        raise ValueError("tier needs lo_exp < hi_exp")
    n = caps.n
    lo = float(n) ** lo_exp
    mask = caps.values > lo
    if hi_exp != math.inf:
        mask &= caps.values <= float(n) ** hi_exp
    return np.flatnonzero(mask)


@dataclass(frozen=True)
class TierPartition:
    tiers: list
    boundaries: tuple
    top: int = field(default=-1)

    def core(self) -> np.ndarray:
        return np.sort(np.concatenate(self.tiers))


def tier_partition(caps: CapacitySequence, params: CoreParameters) -> TierPartition:
    """``V_0 = {i*}``, ``V_1`` = above ``beta_1`` minus ``i*``, then the beta bands."""
    top = caps.max_index()
    beta = params.beta
    tiers = [np.array([top], dtype=np.int64)]
    if params.k_star >= 1:
        v1 = tier(caps, beta[1])
        tiers.append(v1[v1 != top])
    for k in range(2, params.k_star + 1):
        # small N with tau near 3 can make beta increase; the band is then empty
        vk = tier(caps, beta[k], beta[k - 1]) if beta[k] < beta[k - 1] else np.empty(0, dtype=np.int64)
        tiers.append(vk[vk != top])
    return TierPartition(tiers=tiers, boundaries=tuple(beta), top=top)


def w(gamma: float, tau: float) -> int:
    """Predicted hop width of a thin tier at height ``gamma``."""
    tau = _check_tau(tau)
    if not 0.0 < gamma < 0.5:
        raise ValueError("gamma must lie in (0, 1/2)")
    x = (1.0 - (tau - 1.0) * gamma) / ((3.0 - tau) * gamma)
    # absorb rounding when x is an integer in exact arithmetic
    return math.ceil(x - _CEIL_SLACK)


def backup_depth(n: int, gamma: float, tau: float, ell_fn=None) -> tuple[list[float], int]:
    """Back-up recursion ``gamma_0 = gamma``, ``gamma_1 = gamma - eps``,
    ``gamma_{k+1} = (tau-2) gamma_k + eps``; stops at the first ``k >= 1`` with
    ``gamma_k <= (4-tau)/(3-tau) * eps`` and returns ``(sequence, k_bar)``.
    """
    tau = _check_tau(tau)
    eps = epsilon(n, resolve_ell(ell_fn))
    if not eps < gamma < 0.5:
        raise ValueError(f"gamma must lie in (epsilon={eps:.6g}, 1/2)")
    floor = (4.0 - tau) / (3.0 - tau) * eps
    seq = [gamma, gamma - eps]
    while seq[-1] > floor:
        seq.append((tau - 2.0) * seq[-1] + eps)
    return seq, len(seq) - 1


def delete_above(graph: MultiGraph, caps: CapacitySequence, gamma: float) -> InducedSubgraph:
    """``H_gamma``: drop every vertex with capacity above ``N**gamma``."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return induced_subgraph(graph, caps.values <= float(caps.n) ** gamma)


def robust_distance_bound(n: int, gamma: float, tau: float, ell_fn=None) -> float:
    """Leading-order distance bound in ``H_gamma`` without the (1+o(1)) factor."""
    tau = _check_tau(tau)
    eps = epsilon(n, resolve_ell(ell_fn))
    if not eps < gamma < 0.5:
        raise ValueError(f"gamma must lie in (epsilon={eps:.6g}, 1/2)")
    vertical = 2.0 / -math.log(tau - 2.0) * (math.log(math.log(n)) - math.log(1.0 / gamma))
    return vertical + w(gamma, tau)


def _w_exact(gamma: Fraction, tau: Fraction) -> int:
    x = (1 - (tau - 1) * gamma) / ((3 - tau) * gamma)
    return -((-x.numerator) // x.denominator)


@dataclass(frozen=True)
class HeuristicReport:
    tau_values: tuple
    gamma_values: tuple
    checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def horizontal_heuristic_check(gamma_grid, tau) -> HeuristicReport:
    """Check ``w((tau-2) gamma) > w(gamma) + 2`` on every grid point.

    ``tau`` may be a scalar or an iterable. Values are converted to exact
    fractions from their decimal repr, so ceilings are evaluated exactly.
    Violations are ``(tau, gamma, w((tau-2)gamma), w(gamma))`` tuples.
    """
    taus = [tau] if np.isscalar(tau) else list(tau)
    gammas = list(gamma_grid)
    violations = []
    checked = 0
    for t in taus:
        _check_tau(t)
        tf = Fraction(repr(float(t)))
        for g in gammas:
            gf = Fraction(repr(float(g)))
            lower = (tf - 2) * gf
            if not (0 < gf < Fraction(1, 2) and 0 < lower < Fraction(1, 2)):
                raise ValueError(f"grid point gamma={g} outside (0, 1/2)")
            hi, lo = _w_exact(gf, tf), _w_exact(lower, tf)
            checked += 1
            if not lo > hi + 2:
                violations.append((float(t), float(g), lo, hi))
    return HeuristicReport(tuple(taus), tuple(gammas), checked, violations)
