"""Entropy-regularized optimal transport in the log domain.

sinkhorn_solve minimizes  <pi, C> + epsilon * KL(pi || w x q)  over couplings
of (mu, nu) by alternating dual (potential) updates with logsumexp; the
iteration is stopped when the L1 marginal error drops below tol. Small
epsilon targets are reached by warm-starting the potentials along a geometric
epsilon schedule; that only changes the starting point, not the fixed point.
The returned coupling is rounded to exact marginals, so its cost is a true
feasible transport cost and the reported value can never undercut W1 by more
than float roundoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .errors import ConfigError, ConvergenceError
from .measures import DiscreteMeasure
from .ot_exact import _check_pair


@dataclass(frozen=True)
class EntropicSolution:
    """value = <pi, C> + epsilon * KL(pi || w x q) at the returned coupling;
    potentials (f, g) are the dual variables of the regularized problem."""

    value: float
    coupling: np.ndarray
    f: np.ndarray
    g: np.ndarray
    epsilon: float
    iterations: int
    marginal_error: float


def _kl(p, q) -> float:
    """KL(p || q) for arrays of the same shape; 0 log 0 = 0, p>0 where q=0
    gives inf."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ConfigError("p and q must have the same shape")
    if np.any(p < 0) or np.any(q < 0):
        raise ConfigError("KL needs nonnegative inputs")
    mask = p > 0
    if np.any(q[mask] == 0):
        return math.inf
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def kl_divergence(pi, mu, nu) -> float:
    """KL(pi || w x q) of a coupling against the product of its target
    marginals; mu and nu may be measures or raw weight vectors."""
    w = mu.weights if isinstance(mu, DiscreteMeasure) else np.asarray(mu, dtype=np.float64)
    q = nu.weights if isinstance(nu, DiscreteMeasure) else np.asarray(nu, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    if pi.shape != (w.shape[0], q.shape[0]):
        raise ConfigError("coupling shape must be (len(mu), len(nu))")
    return _kl(pi, np.outer(w, q))


def median_pairwise_cost(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    _check_pair(mu, nu)
    return float(np.median(cdist(mu.atoms, nu.atoms)))


def _round_to_marginals(plan, w, q):
    """Altschuler-style rounding: rescale overfull rows, then overfull
    columns, then fix the residual with a rank-one patch. Exact marginals."""
    x = plan * np.minimum(1.0, w / np.maximum(plan.sum(axis=1), 1e-300))[:, None]
    x = x * np.minimum(1.0, q / np.maximum(x.sum(axis=0), 1e-300))[None, :]
    er = np.maximum(w - x.sum(axis=1), 0.0)
    ec = np.maximum(q - x.sum(axis=0), 0.0)
    s = er.sum()
    if s > 0:
        x = x + np.outer(er, ec) / s
    return x


def _iterate(C, logw, logq, eps, f, g, tol, max_iter):
    """Core log-domain loop; returns (f, g, iterations, marginal_error)."""
    it = 0
    err = math.inf
    while it < max_iter:
        # tight mu-marginal after the f update
        f = -eps * logsumexp((g[None, :] - C) / eps + logq[None, :], axis=1)
        g = -eps * logsumexp((f[:, None] - C) / eps + logw[:, None], axis=0)
        it += 1
        # nu-marginal is tight after the g update; check the mu side
        logpi = (f[:, None] + g[None, :] - C) / eps + logw[:, None] + logq[None, :]
        err = float(np.abs(np.exp(logsumexp(logpi, axis=1)) - np.exp(logw)).sum())
        if err <= tol:
            break
    return f, g, it, err


def sinkhorn_solve(mu: DiscreteMeasure, nu: DiscreteMeasure, epsilon: float,
                   tol: float = 1e-9, max_iter: int = 100_000,
                   anneal: bool = True) -> EntropicSolution:
    _check_pair(mu, nu)
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise ConfigError("epsilon must be positive")
    if np.any(mu.weights == 0) or np.any(nu.weights == 0):
        raise ConfigError("sinkhorn_solve requires strictly positive weights")
    C = cdist(mu.atoms, nu.atoms)
    w = mu.weights
    q = nu.weights
    logw = np.log(w)
    logq = np.log(q)
    scale = max(float(C.max()), 1e-12)

    f = np.zeros(mu.n)
    g = np.zeros(nu.n)
    total_it = 0
    if anneal and epsilon < 0.1 * scale:
        e = 0.1 * scale
        while e > epsilon * 1.0000001:
            f, g, it, _ = _iterate(C, logw, logq, e, f, g, max(tol, 1e-4), max_iter)
            total_it += it
            e = max(epsilon, e / 4.0)
    f, g, it, err = _iterate(C, logw, logq, epsilon, f, g, tol, max_iter)
    total_it += it
    if err > tol:
        raise ConvergenceError(
            f"sinkhorn did not reach marginal error {tol:g} within "
            f"{max_iter} iterations (residual {err:.3e})",
            iterations=total_it, residual=err)

    logpi = (f[:, None] + g[None, :] - C) / epsilon + logw[:, None] + logq[None, :]
    plan = _round_to_marginals(np.exp(logpi), w, q)
    err_final = float(np.abs(plan.sum(axis=1) - w).sum()
                      + np.abs(plan.sum(axis=0) - q).sum())
    value = float((plan * C).sum()) + epsilon * kl_divergence(plan, w, q)
    return EntropicSolution(value=value, coupling=plan, f=f, g=g,
                            epsilon=float(epsilon), iterations=total_it,
                            marginal_error=err_final)
