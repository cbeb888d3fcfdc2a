"""Numerical limit formulas: pi* pgf, extinction probability, giant fraction.

``pi*`` is the mixed Poisson law Poisson(Gamma) where Gamma is the size-biased
capacity, with tail ``x**-(tau-2)`` on ``[1, inf)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from nrgraph.capacity import _check_tau, pareto_quantile, size_biased_quantile
from nrgraph.core import resolve_ell
from nrgraph.rng import substream

QUAD_RTOL = 1e-8
_QUAD_LIMIT = 500


class IntegrationError(RuntimeError):
    pass


def _laplace_power(t: float, a: float) -> float:
    """``int_1^inf a x**-(a+1) exp(-t x) dx`` = E[exp(-t X)] for X ~ Pareto(a)."""
    if t == 0.0:
        return 1.0

    def f_log(u):
        # x = e^u flattens the power-law piece over many decades
        return a * math.exp(-a * u - t * math.exp(u))

    split = max(1.0, 1.0 / t)
    total = 0.0
    err = 0.0
    if split > 1.0:
        v, e = integrate.quad(f_log, 0.0, math.log(split), epsrel=QUAD_RTOL, epsabs=0.0, limit=_QUAD_LIMIT)
        total += v
        err += e

    # y = t x on the tail puts the exponential cutoff at y = 1
    def g(y):
        return a * y ** (-(a + 1.0)) * math.exp(-y)

    v, e = integrate.quad(g, t * split, math.inf, epsrel=QUAD_RTOL, epsabs=0.0, limit=_QUAD_LIMIT)
    total += t ** a * v
    err += t ** a * e
    if not math.isfinite(total) or err > 10 * QUAD_RTOL * max(abs(total), 1e-300):
        raise IntegrationError(f"quadrature failed at t={t}: value {total}, error {err}")
    return total


def pi_star_pgf(s: float, tau: float) -> float:
    """``E[exp(-Gamma (1-s))]``, the generating function of pi* at ``s``."""
    tau = _check_tau(tau)
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    return _laplace_power(1.0 - s, tau - 2.0)


def capacity_laplace(t: float, tau: float) -> float:
    """``E[exp(-t Lambda)]``; equals ``E[s**D]`` for D ~ Poisson(Lambda), s = 1-t."""
    tau = _check_tau(tau)
    return _laplace_power(t, tau - 1.0)


def extinction_probability(tau: float, tol: float = 1e-10, max_iter: int = 100_000,
                           trace: list | None = None) -> float:
    """Smallest fixed point of the pi* pgf by iteration from 0."""
    tau = _check_tau(tau)
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = 0.0
    if trace is not None:
        trace.append(s)
    for _ in range(max_iter):
        nxt = pi_star_pgf(s, tau)
        if trace is not None:
            trace.append(nxt)
        if abs(nxt - s) < tol:
            return nxt
        s = nxt
    raise RuntimeError(f"extinction iteration did not converge in {max_iter} steps")


@dataclass(frozen=True)
class GiantPrediction:
    tau: float
    extinction_prob: float
    giant_fraction: float
    tolerance: float = field(default=1e-10)


def giant_fraction(tau: float, tol: float = 1e-10) -> GiantPrediction:
    """Limit relative giant size ``1 - E[q**D]``, D ~ Poisson(Lambda).

    The ``j = 0`` term is included: vertices of degree zero are never in the
    giant component.
    """
    q = extinction_probability(tau, tol)
    frac = 1.0 - capacity_laplace(1.0 - q, tau)
    return GiantPrediction(tau=float(tau), extinction_prob=q, giant_fraction=frac, tolerance=tol)


def monte_carlo_giant_fraction(tau: float, trees: int, seed: int, depth: int = 50,
                               survive_at: int = 200) -> float:
    """Survival frequency of two-stage Galton-Watson trees.

    The root has Poisson(Lambda) children, later individuals Poisson(Gamma).
    A tree counts as surviving once it reaches ``depth`` generations or a
    population of ``survive_at`` (extinction from there has probability at
    most ``q**survive_at``).
    """
    tau = _check_tau(tau)
    rng = substream(seed, 7)
    root = pareto_quantile(1.0 - rng.random(trees), tau)
    pop = rng.poisson(root).astype(np.int64)
    survived = np.zeros(trees, dtype=bool)
    for _ in range(depth - 1):
        survived |= pop >= survive_at
        active = np.flatnonzero((pop > 0) & ~survived)
        if active.size == 0:
            break
        counts = pop[active]
        gammas = size_biased_quantile(1.0 - rng.random(int(counts.sum())), tau)
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        pop[active] = rng.poisson(np.add.reduceat(gammas, starts))
    survived |= pop > 0
    return float(survived.mean())


def core_removed_scale(n: int, tau: float, ell_fn=None) -> float:
    """Distance scale ``log N / ((3 - tau) ell(N))`` once the core is gone."""
    tau = _check_tau(tau)
    if n < 3:
        raise ValueError("n must be >= 3")
    return math.log(n) / ((3.0 - tau) * resolve_ell(ell_fn)(n))
