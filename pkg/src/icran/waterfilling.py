"""Water-filling best responses and the rate-adaptive / fixed-margin games.

The rate-adaptive (RA) game has each user maximize its own rate under a
power budget; the best response is classical water-filling against the
measured noise-plus-interference (NPI).  The fixed-margin (FM) game has each
user minimize power subject to a rate target; the best response is again a
water-filling form with the level set by the target.  Convergence
certificates come from spectral conditions on the worst-case crosstalk
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channels import ParallelChannel, rate_parallel
from .errors import DimensionError, FeasibilityError, ParameterError
from .power_control import spectral_radius
from .trace import SolverTrace

__all__ = [
    "waterfill",
    "fm_waterfill",
    "iwfa",
    "fm_iwfa",
    "Certificate",
    "cert_simultaneous",
    "cert_sequential",
    "cert_symmetric_crosstalk",
    "fm_feasibility_check",
    "upsilon_matrix",
    "ne_residual",
]

_BISECT_ITERS = 200


def waterfill(gains, npi, budget: float) -> np.ndarray:
    """Rate-maximizing powers p_n = [1/lambda - npi_n/gains_n]^+ summing to budget.

    ``gains`` are the effective direct power gains per tone and ``npi`` the
    noise-plus-interference levels (>= 1 with unit noise).  The water level
    is located by bisection on the dual variable and then polished to the
    exact level for the identified active set, so the budget is met to
    floating-point accuracy.
    """
    gains = np.asarray(gains, dtype=float)
    npi = np.asarray(npi, dtype=float)
    if gains.shape != npi.shape or gains.ndim != 1:
        raise DimensionError("gains and npi must be 1-D arrays of equal length")
    if np.any(gains <= 0) or np.any(npi <= 0):
        raise ParameterError("gains and npi must be positive")
    if budget < 0:
        raise ParameterError("budget must be nonnegative")
    if budget == 0:
        return np.zeros_like(gains)

    floors = npi / gains
    lam_lo, lam_hi = 0.0, float(np.max(gains / npi)) * (1.0 + budget)
    for _ in range(_BISECT_ITERS):
        lam = 0.5 * (lam_lo + lam_hi)
        total = np.maximum(1.0 / lam - floors, 0.0).sum()
        if total > budget:
            lam_lo = lam
        else:
            lam_hi = lam
    level = 1.0 / lam_hi
    active = level > floors
    if not np.any(active):
        active = floors == floors.min()
    exact = (budget + floors[active].sum()) / active.sum()
    # accept the polish only if it is consistent with the bracketing set
    if exact > floors[active].max() and (
        not np.any(~active) or exact <= floors[~active].min() * (1 + 1e-12)
    ):
        level = exact
    p = np.where(active, np.maximum(level - floors, 0.0), 0.0)
    # the level subtraction rounds at the floors' scale; shift the largest
    # tone by the (sub-ulp) residual so the budget is met in relative terms
    residual = budget - p.sum()
    top = int(np.argmax(p))
    if p[top] + residual >= 0.0:
        p[top] += residual
    return p


def fm_waterfill(
    gains, npi, rate_target: float, tol: float = 1e-8, level_cap: float = 1e18
) -> np.ndarray:
    """Power-minimizing allocation p_n = [lambda - npi_n/gains_n]^+ hitting a rate.

    The water level lambda is found by bisection until the achieved rate
    matches ``rate_target`` (bits) within ``tol``, then polished to the exact
    level for the active set.  Raises ``FeasibilityError`` if the required
    level would exceed ``level_cap``.
    """
    gains = np.asarray(gains, dtype=float)
    npi = np.asarray(npi, dtype=float)
    if gains.shape != npi.shape or gains.ndim != 1:
        raise DimensionError("gains and npi must be 1-D arrays of equal length")
    if np.any(gains <= 0) or np.any(npi <= 0):
        raise ParameterError("gains and npi must be positive")
    if rate_target < 0:
        raise ParameterError("rate target must be nonnegative")
    if rate_target == 0:
        return np.zeros_like(gains)

    floors = npi / gains

    def rate(level):
        act = level > floors
        if not np.any(act):
            return 0.0
        return float(np.log2(level / floors[act]).sum())

    lo = float(floors.min())
    log2_hi = np.log2(lo) + rate_target  # best tone alone can deliver the target
    if log2_hi > np.log2(level_cap):
        if rate(level_cap) < rate_target:
            raise FeasibilityError(
                f"water level above cap {level_cap:g} needed for rate {rate_target:g}"
            )
        log2_hi = np.log2(level_cap)
    hi = float(2.0 ** log2_hi)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if rate(mid) < rate_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    level = hi
    active = level > floors
    exact = float(2.0 ** ((rate_target + np.log2(floors[active]).sum()) / active.sum()))
    if exact > floors[active].max() and (
        not np.any(~active) or exact <= floors[~active].min() * (1 + 1e-12)
    ):
        level = exact
    p = np.where(active, np.maximum(level - floors, 0.0), 0.0)
    if abs(rate(level) - rate_target) > tol:
        raise FeasibilityError(
            f"rate target {rate_target:g} not met within {tol:g} by bisection"
        )
    return p


# ---------------------------------------------------------------------------
# crosstalk certificates
# ---------------------------------------------------------------------------

def upsilon_matrix(ch: ParallelChannel) -> np.ndarray:
    """Worst-case crosstalk ratios: [q, r] = max_n |H_rq|^2 / |H_qq|^2, zero diagonal."""
    g = np.abs(ch.gains) ** 2  # g[n, l, k]
    direct = np.einsum("nkk->nk", g)
    ups = (g / direct[:, None, :]).max(axis=0).T  # [q, r] = max_n g[n,r,q]/g[n,q,q]
    np.fill_diagonal(ups, 0.0)
    return ups


@dataclass(frozen=True)
class Certificate:
    holds: bool
    rho: float


def cert_simultaneous(ch: ParallelChannel) -> Certificate:
    """Sufficient condition rho(Upsilon) < 1 for simultaneous-update convergence."""
    rho = spectral_radius(upsilon_matrix(ch))
    return Certificate(holds=bool(rho < 1.0), rho=rho)


def cert_sequential(ch: ParallelChannel) -> Certificate:
    """Sufficient condition rho((I - U_low)^-1 U_upp) < 1 for sequential updates."""
    ups = upsilon_matrix(ch)
    low = np.tril(ups, -1)
    upp = np.triu(ups, 1)
    m = np.linalg.solve(np.eye(ch.K) - low, upp)
    rho = spectral_radius(m)
    return Certificate(holds=bool(rho < 1.0), rho=rho)


def cert_symmetric_crosstalk(ch: ParallelChannel, tol: float = 1e-9) -> bool:
    """True when every normalized crosstalk ratio is symmetric per tone."""
    g = np.abs(ch.gains) ** 2
    direct = np.einsum("nkk->nk", g)
    ratio = g / direct[:, None, :]  # ratio[n, r, q] = |H_rq|^2 / |H_qq|^2
    return bool(np.abs(ratio - ratio.transpose(0, 2, 1)).max() <= tol)


def fm_feasibility_check(ch: ParallelChannel, rate_targets) -> bool:
    """Sufficient condition for bounded FM-game powers, evaluated verbatim.

    Requires sum_{l != k} |H_kl|^2 / |H_kk|^2 < 1 / (exp(zeta_k) - 1) on
    every tone.  Note the right-hand side uses the natural exponential even
    though rates are measured in bits elsewhere; the condition is applied
    exactly as stated, which makes it slightly conservative for log2 rates.
    """
    zeta = np.asarray(rate_targets, dtype=float)
    if zeta.shape != (ch.K,):
        raise DimensionError(f"need {ch.K} rate targets, got shape {zeta.shape}")
    g = np.abs(ch.gains) ** 2
    direct = np.einsum("nkk->nk", g)  # (N, K)
    caused = g.sum(axis=2) - np.einsum("nkk->nk", g)  # sum_{l != k} |H_kl|^2
    lhs = (caused / direct).max(axis=0)  # worst tone per user
    with np.errstate(divide="ignore", over="ignore"):
        rhs = np.where(zeta > 0, 1.0 / np.expm1(zeta), np.inf)
    return bool(np.all(lhs < rhs))


# ---------------------------------------------------------------------------
# games
# ---------------------------------------------------------------------------

def _npi_for_user(g2: np.ndarray, P: np.ndarray, k: int) -> np.ndarray:
    received = np.einsum("nl,ln->n", g2[:, :, k], P)
    return 1.0 + received - g2[:, k, k] * P[k]


def _best_response(ch: ParallelChannel, g2: np.ndarray, P: np.ndarray, k: int) -> np.ndarray:
    return waterfill(g2[:, k, k], _npi_for_user(g2, P, k), ch.budgets[k])


def ne_residual(ch: ParallelChannel, P) -> float:
    """Max over users of the infinity-distance to their best response (0 at an NE)."""
    P = np.asarray(P, dtype=float)
    g2 = np.abs(ch.gains) ** 2
    return max(
        float(np.abs(P[k] - _best_response(ch, g2, P, k)).max()) for k in range(ch.K)
    )


def iwfa(
    ch: ParallelChannel,
    schedule: str = "sequential",
    damping: float = 0.0,
    tol: float = 1e-8,
    max_iter: int = 1000,
) -> SolverTrace:
    """Iterative water-filling: repeated best responses to measured NPI.

    ``schedule`` is "sequential" (users update one at a time within a sweep,
    each seeing the freshest powers) or "simultaneous" (all best responses
    computed against the previous iterate).  With damping theta the update is
    ``theta * old + (1 - theta) * best_response``.  Convergence is declared
    when the best-response residual drops below ``tol``; divergent runs
    return their full trace with ``converged=False`` rather than raising.
    """
    if schedule not in ("sequential", "simultaneous"):
        raise ParameterError(f"unknown schedule {schedule!r}")
    if not 0.0 <= damping < 1.0:
        raise ParameterError("damping must lie in [0, 1)")
    g2 = np.abs(ch.gains) ** 2
    P = np.zeros((ch.K, ch.N))
    rates = rate_parallel(ch, P)
    history = [float(rates.sum())]
    residuals = []
    rates_history = [rates]
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        if schedule == "simultaneous":
            brs = np.stack([_best_response(ch, g2, P, k) for k in range(ch.K)])
            P = damping * P + (1.0 - damping) * brs
        else:
            P = P.copy()
            for k in range(ch.K):
                br = _best_response(ch, g2, P, k)
                P[k] = damping * P[k] + (1.0 - damping) * br
        rates = rate_parallel(ch, P)
        history.append(float(rates.sum()))
        rates_history.append(rates)
        res = ne_residual(ch, P)
        residuals.append(res)
        if res < tol:
            converged = True
            reason = "best-response residual below tol"
            break
    return SolverTrace(
        objective_history=history,
        final=P,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={
            "residual_history": np.asarray(residuals),
            "rates_history": np.asarray(rates_history),
        },
    )


def fm_iwfa(
    ch: ParallelChannel,
    rate_targets,
    schedule: str = "sequential",
    tol: float = 1e-8,
    max_iter: int = 1000,
    override_feasibility: bool = False,
    level_cap: float = 1e12,
) -> SolverTrace:
    """Fixed-margin game: users iterate minimum-power water-filling to rate targets.

    The sufficient feasibility condition is checked up front (it can be
    skipped with ``override_feasibility=True`` since it is only sufficient).
    A user whose water level exceeds ``level_cap`` triggers a
    ``FeasibilityError`` naming it.
    """
    if schedule not in ("sequential", "simultaneous"):
        raise ParameterError(f"unknown schedule {schedule!r}")
    zeta = np.asarray(rate_targets, dtype=float)
    if not override_feasibility and not fm_feasibility_check(ch, zeta):
        raise FeasibilityError(
            "fm_feasibility_check failed; pass override_feasibility=True to run anyway"
        )
    g2 = np.abs(ch.gains) ** 2
    P = np.zeros((ch.K, ch.N))
    history = [float(P.sum())]
    rates_history = [rate_parallel(ch, P)]
    converged = False
    reason = "max_iter reached"
    it = 0

    def fm_response(P, k):
        try:
            return fm_waterfill(
                g2[:, k, k], _npi_for_user(g2, P, k), zeta[k], level_cap=level_cap
            )
        except FeasibilityError as exc:
            raise FeasibilityError(
                f"user {k}: water level cap exceeded; rate targets look infeasible"
            ) from exc

    for it in range(1, max_iter + 1):
        if schedule == "simultaneous":
            P = np.stack([fm_response(P, k) for k in range(ch.K)])
        else:
            P = P.copy()
            for k in range(ch.K):
                P[k] = fm_response(P, k)
        rates = rate_parallel(ch, P)
        history.append(float(P.sum()))
        rates_history.append(rates)
        residual = max(
            float(np.abs(P[k] - fm_response(P, k)).max()) for k in range(ch.K)
        )
        if residual < tol:
            converged = True
            reason = "best-response residual below tol"
            break
    return SolverTrace(
        objective_history=history,
        final=P,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={"rates_history": np.asarray(rates_history), "rate_targets": zeta},
    )
