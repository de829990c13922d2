"""Restarted GMRES(m) with optional right preconditioning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

REORTH_THRESHOLD = 1.0 / math.sqrt(2.0)
BREAKDOWN = 1e-14
STAGNATION_CYCLE = 10


@dataclass(frozen=True)
class KrylovConfig:
    restart: int = 50
    tolerance: float = 1e-10
    max_iterations: int = 1000

    def __post_init__(self):
        if self.restart < 1:
            raise ConfigurationError(f"restart must be >= 1, got {self.restart}")
        if not self.tolerance > 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be >= 1")


@dataclass
class KrylovStats:
    iterations: int = 0
    converged: bool = False
    final_relative_residual: float = math.inf
    restarts: int = 0
    # per-iteration least-squares residual estimates, relative to ||b||; a
    # new list starts at every restart
    residual_history: list = field(default_factory=list)
    breakdown: bool = False
    stagnated: bool = False


def _givens(a, b):
    if b == 0.0:
        return 1.0, 0.0
    r = math.hypot(a, b)
    return a / r, b / r


def gmres(apply_op, b, x0=None, config: KrylovConfig | None = None, precond=None):
    """Solve ``apply_op(x) = b``.

    With ``precond`` the iteration runs on ``A P`` and returns ``x = x0 + P y``.
    Convergence is ``||b - A x|| <= tol * ||b||`` on the true residual, checked
    at the end of each restart cycle. Returns ``(x, KrylovStats)``.
    """
    config = config or KrylovConfig()
    b = np.asarray(b, dtype=float)
    n = b.size
    stats = KrylovStats()
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        stats.converged = True
        stats.final_relative_residual = 0.0
        return np.zeros(n), stats
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    target = config.tolerance * bnorm
    m = min(config.restart, n)

    r = b - apply_op(x) if np.any(x) else b.copy()
    beta = float(np.linalg.norm(r))
    best_x, best_res = x.copy(), beta
    while True:
        if beta <= target:
            stats.converged = True
            break
        if stats.iterations >= config.max_iterations:
            break
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        cycle = []
        stats.residual_history.append(cycle)
        k = 0
        lucky = False
        estimate_met = False
        beta_start = beta
        while k < m and stats.iterations < config.max_iterations:
            z = V[k] if precond is None else precond(V[k])
            w = np.asarray(apply_op(z), dtype=float).copy()
            stats.iterations += 1
            norm_before = float(np.linalg.norm(w))
            for i in range(k + 1):
                h = float(np.dot(V[i], w))
                H[i, k] = h
                w -= h * V[i]
            norm_after = float(np.linalg.norm(w))
            if norm_after < REORTH_THRESHOLD * norm_before:
                for i in range(k + 1):
                    h = float(np.dot(V[i], w))
                    H[i, k] += h
                    w -= h * V[i]
                norm_after = float(np.linalg.norm(w))
            H[k + 1, k] = norm_after
            for i in range(k):
                t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = t
            cs[k], sn[k] = _givens(H[k, k], H[k + 1, k])
            H[k, k] = cs[k] * H[k, k] + sn[k] * norm_after
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k += 1
            cycle.append(abs(g[k]) / bnorm)
            if norm_after <= BREAKDOWN * norm_before:
                lucky = True
                stats.breakdown = True
                break
            V[k] = w / norm_after
            if abs(g[k]) <= target:
                estimate_met = True
                break
        y = _back_substitute(H[:k, :k], g[:k])
        update = V[:k].T @ y
        if precond is not None:
            update = precond(update)
        x = x + update
        r = b - apply_op(x)
        beta = float(np.linalg.norm(r))
        stats.restarts += 1
        if beta < best_res:
            best_x, best_res = x.copy(), beta
        if lucky and beta > target:
            # invariant subspace: restarting cannot improve on this
            break
        # the estimate says done but the true residual barely moved: a rounding
        # floor. A full cycle with under 10% progress: restart stagnation.
        floor = estimate_met and beta > 0.5 * beta_start
        stuck = k >= min(m, STAGNATION_CYCLE) and beta > 0.9 * beta_start
        if beta > target and (floor or stuck):
            stats.stagnated = True
            break
    if not (beta <= target) and best_res < beta:
        x, beta = best_x, best_res
    stats.converged = beta <= target
    stats.final_relative_residual = beta / bnorm
    return x, stats


def _back_substitute(R, g):
    k = g.size
    y = np.zeros(k)
    for i in range(k - 1, -1, -1):
        s = g[i] - float(np.dot(R[i, i + 1:k], y[i + 1:k]))
        if R[i, i] == 0.0:
            y[i] = 0.0
        else:
            y[i] = s / R[i, i]
    return y
