"""Classical scalar-IC power control.

Max-min SINR via the spectral-radius optimum and its autonomous tracking
iteration, QoS feasibility through the coupling matrix A, the closed-form
minimum-power allocation, and the distributed fixed-point iteration that
converges to it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ScalarChannel, sinr_scalar
from .errors import (
    DegenerateChannelError,
    DimensionError,
    FeasibilityError,
    ParameterError,
)
from .trace import SolverTrace

__all__ = [
    "z_matrix",
    "a_matrix",
    "b_vector",
    "spectral_radius",
    "maxmin_sinr_optimum",
    "apc_step",
    "Feasibility",
    "minpower_feasible",
    "minpower_closed_form",
    "yates_fixed_point",
]


def _direct_gains(ch: ScalarChannel) -> np.ndarray:
    g = np.abs(np.diag(ch.gains)) ** 2
    if np.any(g <= 0):
        raise DegenerateChannelError("a direct gain is zero")
    return g


def z_matrix(ch: ScalarChannel) -> np.ndarray:
    """Gain-ratio matrix Z[k, l] = |H_lk|^2 / |H_kk|^2 (unit diagonal)."""
    g = np.abs(ch.gains) ** 2
    return g.T / _direct_gains(ch)[:, None]


def a_matrix(ch: ScalarChannel, gamma) -> np.ndarray:
    """Target-scaled coupling matrix A[k, l] = gamma_k |H_lk|^2 / |H_kk|^2, zero diagonal."""
    gamma = _as_targets(ch, gamma)
    a = gamma[:, None] * z_matrix(ch)
    np.fill_diagonal(a, 0.0)
    return a


def b_vector(ch: ScalarChannel, gamma) -> np.ndarray:
    return _as_targets(ch, gamma) / _direct_gains(ch)


def _as_targets(ch: ScalarChannel, gamma) -> np.ndarray:
    targets = getattr(gamma, "sinr_targets", gamma)
    if targets is None:
        raise ParameterError("SINR targets are required")
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (ch.K,):
        raise DimensionError(f"need {ch.K} SINR targets, got shape {targets.shape}")
    if np.any(targets < 0):
        raise ParameterError("SINR targets must be nonnegative")
    return targets


def spectral_radius(m, tol: float = 1e-10, max_iter: int = 200_000) -> float:
    """Perron root of a nonnegative square matrix by shifted power iteration.

    Iterating on ``m + I`` keeps the dominant eigenvalue simple in modulus
    even for periodic zero-diagonal couplings, and with the deterministic
    all-ones start the iterate stays strictly positive.  Falls back to a
    dense eigensolve in the (defective) cases where the ratio estimate has
    not settled within ``max_iter``.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError("matrix entries must be finite")
    if np.any(m < 0):
        raise ParameterError("spectral_radius expects a nonnegative matrix")
    n = m.shape[0]
    if n == 1:
        return float(m[0, 0])
    shifted = m + np.eye(n)
    x = np.ones(n)
    x /= np.linalg.norm(x)
    estimate = None
    restarts = 0
    for _ in range(max_iter):
        y = shifted @ x
        norm = np.linalg.norm(y)
        if norm < 1e-300:
            # breakdown: restart from the next basis vector
            x = np.zeros(n)
            x[restarts % n] = 1.0
            restarts += 1
            estimate = None
            continue
        new = norm  # x is unit, so ||(m + I) x|| -> rho(m) + 1
        x = y / norm
        # successive differences under-report the error by q/(1-q); stop two
        # orders below the requested tolerance to cover ratios up to ~0.99
        if estimate is not None and abs(new - estimate) <= 0.01 * tol * max(1.0, new):
            return float(new - 1.0)
        estimate = new
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def maxmin_sinr_optimum(ch: ScalarChannel) -> float:
    """Optimal max-min SINR value 1 / (rho(Z) - 1).

    This is the supremum of the max-min problem: with unbounded powers the
    SINRs approach the interference-limited value but never exceed it.
    """
    if ch.K < 2:
        raise DimensionError("max-min SINR optimum needs K >= 2 users")
    rho = spectral_radius(z_matrix(ch))
    if rho <= 1.0 + 1e-12:
        raise DegenerateChannelError(
            f"rho(Z) = {rho:.6g} <= 1: max-min SINR is unbounded for this channel"
        )
    return 1.0 / (rho - 1.0)


def apc_step(ch: ScalarChannel, p, gamma_star: float, beta: float) -> np.ndarray:
    """One autonomous power-control update toward the common target SINR.

    Solves the per-user relation
    ``|H_kk|^2 p_k' / den_k = SINR_k - beta (SINR_k - gamma*)`` for the next
    power, clamped at zero; ``den_k`` is the current interference plus noise.
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    p = np.asarray(p, dtype=float)
    g = np.abs(ch.gains) ** 2
    received = g.T @ p
    own = np.diag(g) * p
    den = 1.0 + received - own
    sinr = own / den
    p_next = p - beta * (sinr - gamma_star) * den / _direct_gains(ch)
    return np.maximum(p_next, 0.0)


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    rho: float


def minpower_feasible(ch: ScalarChannel, gamma) -> Feasibility:
    """A set of SINR targets is supportable iff rho(A) < 1."""
    rho = spectral_radius(a_matrix(ch, gamma))
    return Feasibility(feasible=bool(rho < 1.0), rho=rho)


def minpower_closed_form(ch: ScalarChannel, gamma) -> np.ndarray:
    """Componentwise-minimal powers meeting the targets: solve (I - A) p = b."""
    a = a_matrix(ch, gamma)
    feas = minpower_feasible(ch, gamma)
    if not feas.feasible:
        raise FeasibilityError(
            f"SINR targets infeasible: rho(A) = {feas.rho:.6g} >= 1", rho=feas.rho
        )
    p = np.linalg.solve(np.eye(ch.K) - a, b_vector(ch, gamma))
    return np.maximum(p, 0.0)


def yates_fixed_point(
    ch: ScalarChannel,
    gamma,
    p0=None,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    divergence_threshold: float = 1e12,
) -> SolverTrace:
    """Distributed min-power iteration p_k <- gamma_k (1 + interference_k) / |H_kk|^2.

    On feasible instances this is a standard-interference-function iteration
    contracting to the closed-form solution at the linear rate rho(A); the
    trace records the total power per iterate plus, when the instance is
    feasible, the infinity-norm distance to the limit so the contraction
    factor can be estimated.  Iterates blowing past ``divergence_threshold``
    flag infeasibility instead of raising.
    """
    gamma_vec = _as_targets(ch, gamma)
    a = a_matrix(ch, gamma_vec)
    b = b_vector(ch, gamma_vec)
    feas = minpower_feasible(ch, gamma_vec)
    limit = None
    if feas.feasible:
        limit = np.linalg.solve(np.eye(ch.K) - a, b)

    p = np.zeros(ch.K) if p0 is None else np.asarray(p0, dtype=float).copy()
    history = [float(p.sum())]
    dists = [] if limit is None else [float(np.abs(p - limit).max())]
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        p_next = a @ p + b
        history.append(float(p_next.sum()))
        if limit is not None:
            dists.append(float(np.abs(p_next - limit).max()))
        delta = float(np.abs(p_next - p).max())
        p = p_next
        if np.abs(p).max() > divergence_threshold:
            reason = f"diverged: ||p||_inf > {divergence_threshold:g} (targets infeasible)"
            break
        if delta < tol:
            converged = True
            reason = "fixed point reached"
            break
    extra = {"rho": feas.rho, "feasible": feas.feasible}
    if limit is not None:
        extra["dist_to_limit"] = np.asarray(dists)
        extra["limit"] = limit
    return SolverTrace(
        objective_history=history,
        final=p,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra=extra,
    )
