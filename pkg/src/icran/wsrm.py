"""Weighted sum-rate maximization solvers under one trace contract.

Four local methods for the (NP-hard) weighted sum-rate problem:

* ``mdp_solve``     -- sequential interference pricing on a parallel IC,
  per-tone closed-form updates with a bisected power dual.
* ``scale_solve``   -- successive concave lower bounds ``a log2 z + b`` on
  ``log2(1 + z)``, inner maximization by projected gradient ascent in
  log-power coordinates.
* ``wmmse_parallel`` / ``wmmse_mimo`` -- block-coordinate updates of
  (receiver, weight, transmitter) triples for the equivalent weighted-MMSE
  problem; all per-user updates are closed form except a scalar bisection
  for each power multiplier.
* ``cca_miso``      -- cyclic projected-gradient ascent with Armijo steps
  for any smooth utility of the MISO rates.

Every solver records its true weighted sum rate per iteration; the histories
are nondecreasing up to floating-point slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import (
    MimoChannel,
    MisoChannel,
    ParallelChannel,
    rate_miso,
    rate_parallel,
    sinr_miso,
    sinr_parallel,
)
from .errors import DimensionError, NonSmoothUtilityError, ParameterError
from .trace import SolverTrace
from .utilities import UtilitySpec, evaluate, marginal_utility

__all__ = [
    "BeamformerSet",
    "interference_prices",
    "mdp_solve",
    "scale_params",
    "scale_solve",
    "wmmse_parallel",
    "wmmse_mimo",
    "utility_admissible",
    "cca_miso",
    "cca_gradient",
]

LN2 = np.log(2.0)


@dataclass
class BeamformerSet:
    """Transmit/receive beamformers plus the WMMSE weight matrices."""

    V: list
    U: list
    W: Optional[list]
    d: tuple


def _weights(weights, K) -> np.ndarray:
    if weights is None:
        return np.ones(K)
    mu = np.asarray(weights, dtype=float)
    if mu.shape != (K,):
        raise DimensionError(f"need {K} weights, got shape {mu.shape}")
    if np.any(mu <= 0):
        raise ParameterError("weights must be positive")
    return mu


def _npi_all(g2: np.ndarray, P: np.ndarray) -> np.ndarray:
    """Noise-plus-interference per (tone, user), shape (N, K)."""
    received = np.einsum("nlk,ln->nk", g2, P)
    own = np.einsum("nkk->nk", g2) * P.T
    return 1.0 + received - own


# ---------------------------------------------------------------------------
# MDP: sequential interference pricing
# ---------------------------------------------------------------------------

def interference_prices(ch: ParallelChannel, P, weights=None) -> np.ndarray:
    """Per-(user, tone) interference prices, shape (K, N).

    ``T[k, n]`` is the marginal decrease (in bits) of the other users'
    weighted rates per unit of power user k adds on tone n: the sum over
    victims l of ``mu_l |H_kl|^2 (1/B_l - 1/S_l) / ln 2`` with ``B_l`` the
    noise-plus-interference and ``S_l`` the total received power at
    receiver l.  Zero whenever all cross gains vanish, so pricing reduces
    to plain iterative water-filling on interference-free channels.
    """
    P = np.asarray(P, dtype=float)
    g2 = np.abs(ch.gains) ** 2
    mu = _weights(weights, ch.K)
    total = 1.0 + np.einsum("njl,jn->nl", g2, P)  # S_l: everything + noise
    own = np.einsum("nll->nl", g2) * P.T  # receiver l's own signal power
    npi = total - own  # B_l
    victim = mu[None, :] * (1.0 / npi - 1.0 / total) / LN2  # [n, l]
    prices = np.einsum("nkl,nl->nk", g2, victim)
    prices -= np.einsum("nkk->nk", g2) * victim  # drop the l == k term
    return prices.T  # (K, N)


def _priced_waterfill(g, npi, prices, budget, mu):
    """Maximize mu * sum log2(1 + g p / npi) - sum prices * p under a budget."""
    floors = npi / g

    def powers(lam):
        den = (lam + prices) * LN2
        with np.errstate(divide="ignore"):
            level = np.where(den > 0, mu / den, np.inf)
        return np.maximum(level - floors, 0.0)

    p0 = powers(0.0)
    if np.all(np.isfinite(p0)) and p0.sum() <= budget:
        return p0
    lam_hi = float(np.max(mu * g / (npi * LN2) - prices))
    lam_hi = max(lam_hi, 1e-30)
    lam_lo = 0.0
    for _ in range(200):
        lam = 0.5 * (lam_lo + lam_hi)
        if powers(lam).sum() > budget:
            lam_lo = lam
        else:
            lam_hi = lam
    return powers(lam_hi)


def mdp_solve(
    ch: ParallelChannel,
    weights=None,
    tol: float = 1e-2,
    max_iter: int = 500,
) -> SolverTrace:
    """Sequential pricing solver for the parallel-IC weighted sum rate.

    One sweep visits the users in index order; before each user's turn its
    prices are refreshed from the current powers, then its priced concave
    subproblem is solved exactly tone-by-tone (closed form given the power
    dual, which is bisected).  The weighted sum rate is nondecreasing across
    sweeps; a stall below ``tol`` terminates.
    """
    mu = _weights(weights, ch.K)
    g2 = np.abs(ch.gains) ** 2
    P = ch.budgets[:, None] / ch.N * np.ones((ch.K, ch.N))
    history = [float(mu @ rate_parallel(ch, P))]
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        for k in range(ch.K):
            prices_k = interference_prices(ch, P, mu)[k]
            npi_k = _npi_all(g2, P)[:, k]
            P[k] = _priced_waterfill(g2[:, k, k], npi_k, prices_k, ch.budgets[k], mu[k])
        history.append(float(mu @ rate_parallel(ch, P)))
        if abs(history[-1] - history[-2]) < tol:
            converged = True
            reason = "objective stalled below tol"
            break
    return SolverTrace(
        objective_history=history,
        final=P,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={"final_rates": rate_parallel(ch, P)},
    )


# ---------------------------------------------------------------------------
# SCALE: successive concave approximation in log powers
# ---------------------------------------------------------------------------

def scale_params(z0):
    """Bound parameters (a, b) with a log2 z + b <= log2(1 + z), tight at z0."""
    z0 = np.asarray(z0, dtype=float)
    a = z0 / (1.0 + z0)
    b = np.log2(1.0 + z0) - a * np.log2(z0)
    return a, b


def _project_budget_rows(P, budgets):
    """Euclidean projection of each row onto {p >= 0, sum p <= budget}.

    Water-level form [p - nu]^+ with the per-user dual nu found by bisection,
    vectorized across users.
    """
    P = np.maximum(P, 0.0)
    excess = P.sum(axis=1) > budgets
    if not np.any(excess):
        return P
    rows = P[excess]
    target = budgets[excess]
    lo = np.zeros(rows.shape[0])
    hi = rows.max(axis=1)
    for _ in range(100):
        nu = 0.5 * (lo + hi)
        total = np.maximum(rows - nu[:, None], 0.0).sum(axis=1)
        too_big = total > target
        lo = np.where(too_big, nu, lo)
        hi = np.where(too_big, hi, nu)
    P = P.copy()
    P[excess] = np.maximum(rows - hi[:, None], 0.0)
    return P


def _scale_surrogate(ch, mu, a, b, P) -> float:
    z = np.maximum(sinr_parallel(ch, P), 1e-300)
    return float((mu[:, None] * (a * np.log2(z) + b)).sum())


def _scale_inner_fixed_point(ch, g2, mu, a, P, iters):
    """Dual fixed point for the relaxed concave problem.

    Alternates the per-tone stationarity update
    ``p_kn = mu_k a_kn / (lam_k ln2 + D_kn)`` (D is the alpha-weighted
    interference price at the current powers) with a water-level bisection
    of each user's budget dual lam_k.
    """
    wa = mu[:, None] * a  # (K, N)
    g_dir = np.einsum("nkk->nk", g2)
    for _ in range(iters):
        recv = np.einsum("nlk,ln->nk", g2, P)
        npi = 1.0 + recv - g_dir * P.T  # B[n, l]
        price = wa.T / npi
        D = (np.einsum("nkl,nl->nk", g2, price) - g_dir * price).T  # (K, N)

        def power_at(lam):
            den = lam[:, None] * LN2 + D
            with np.errstate(divide="ignore"):
                p = np.where(den > 0, wa / den, np.inf)
            return p.sum(axis=1)

        lam = _bisect_power_multiplier(power_at, ch.budgets, iters=80)
        den = lam[:, None] * LN2 + D
        newP = np.where(den > 0, wa / den, 0.0)
        delta = np.abs(newP - P).max()
        P = newP
        if delta < 1e-9 * max(1.0, P.max()):
            break
    return P


def _scale_inner_gradient(ch, g2, mu, a, b, P, iters, p_floor=1e-30):
    """Backtracked projected gradient ascent on the surrogate.

    The gradient is derived in the log-power coordinates where the
    surrogate is concave; the step is applied in linear powers, whose
    water-level simplex projection shares the inner problem's KKT points.
    Every accepted step strictly increases the surrogate.
    """
    g_dir = np.einsum("nkk->nk", g2).T
    cur = _scale_surrogate(ch, mu, a, b, P)
    for _ in range(iters):
        Pf = np.maximum(P, p_floor)
        npi = _npi_all(g2, Pf)
        w_t = (mu[:, None] * a).T / npi
        leak = np.einsum("nkl,nl->nk", g2, w_t).T - g_dir * w_t.T
        grad = (mu[:, None] * a - Pf * leak) / (Pf * LN2)
        s = 0.25 * ch.budgets.max() / max(np.abs(grad).max(), 1e-300)
        accepted = False
        for _ in range(60):
            cand = _project_budget_rows(P + s * grad, ch.budgets)
            val = _scale_surrogate(ch, mu, a, b, np.maximum(cand, p_floor))
            if val > cur + 1e-14 * max(1.0, abs(cur)):
                P, cur, accepted = cand, val, True
                break
            s *= 0.5
        if not accepted:
            break
    return P


def scale_solve(
    ch: ParallelChannel,
    weights=None,
    tol: float = 1e-2,
    max_iter: int = 100,
    inner: Optional[dict] = None,
) -> SolverTrace:
    """Concave-lower-bound solver for the parallel-IC weighted sum rate.

    Alternates (1) inner maximization of the relaxed problem, which is
    concave in log-power coordinates, and (2) refreshing the bound
    parameters at the achieved per-tone SINRs (floored at 1e-12 so dead
    tones contribute a flat bound instead of a singular one).  The inner
    solver is the dual fixed-point iteration with per-user water-level
    bisection (``inner={"fp_iters": ...}``, default 50); if a fixed-point
    pass ever fails to improve the surrogate it is replaced by backtracked
    projected gradient ascent, so the bound's tightness at the refresh
    point makes the true weighted sum rate nondecreasing across outer
    iterations.
    """
    mu = _weights(weights, ch.K)
    inner = dict(inner or {})
    fp_iters = int(inner.get("fp_iters", inner.get("grad_steps", 50)))
    g2 = np.abs(ch.gains) ** 2
    P = ch.budgets[:, None] / ch.N * np.ones((ch.K, ch.N))

    history = [float(mu @ rate_parallel(ch, P))]
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        z0 = np.maximum(sinr_parallel(ch, P), 1e-12)
        a, b = scale_params(z0)
        base = _scale_surrogate(ch, mu, a, b, P)
        cand = _scale_inner_fixed_point(ch, g2, mu, a, P.copy(), fp_iters)
        if _scale_surrogate(ch, mu, a, b, cand) >= base:
            P = cand
        else:
            P = _scale_inner_gradient(ch, g2, mu, a, b, P, fp_iters)
        history.append(float(mu @ rate_parallel(ch, P)))
        if abs(history[-1] - history[-2]) < tol:
            converged = True
            reason = "objective stalled below tol"
            break
    return SolverTrace(
        objective_history=history,
        final=P,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={"final_rates": rate_parallel(ch, P)},
    )


# ---------------------------------------------------------------------------
# WMMSE, parallel channel
# ---------------------------------------------------------------------------

def _bisect_power_multiplier(power_at, budgets, grow_from=1.0, iters=100):
    """Vector bisection for the smallest lam >= 0 with power(lam) <= budget."""
    K = budgets.shape[0]
    lam = np.zeros(K)
    p0 = power_at(lam)
    need = ~(p0 <= budgets)  # catches inf/nan as well
    if not np.any(need):
        return lam
    hi = np.full(K, grow_from)
    for _ in range(200):
        over = need & ~(power_at(hi) <= budgets)
        if not np.any(over):
            break
        hi[over] *= 2.0
    lo = np.zeros(K)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        over = ~(power_at(mid) <= budgets)
        lo = np.where(need & over, mid, lo)
        hi = np.where(need & ~over, mid, hi)
    return np.where(need, hi, 0.0)


def wmmse_parallel(
    ch: ParallelChannel,
    weights=None,
    eps: float = 0.01,
    max_iter: int = 2000,
) -> SolverTrace:
    """Weighted-MMSE block updates for the parallel IC.

    Scalar per-tone updates: MMSE receiver u, weight w = 1/mse, and the
    transmitter v with a per-user multiplier bisected to satisfy the power
    budget.  Terminates when the change in ``sum log w`` drops to ``eps``.
    """
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    mu = _weights(weights, ch.K)
    H = np.einsum("nkk->nk", ch.gains).T  # direct gains, (K, N)
    g2 = np.abs(ch.gains) ** 2
    v = np.sqrt(ch.budgets / ch.N)[:, None] * np.ones((ch.K, ch.N), dtype=complex)

    def wsr(v):
        return float(mu @ rate_parallel(ch, np.abs(v) ** 2))

    history = [wsr(v)]
    w_prev = None
    sum_log_w = np.nan
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        pv = np.abs(v) ** 2
        recv = np.einsum("nlk,ln->nk", g2, pv).T + 1.0  # (K, N), includes own
        u = H * v / recv
        mse = 1.0 - (np.conj(u) * H * v).real
        w = 1.0 / np.maximum(mse, 1e-12)
        uw = np.abs(u) ** 2 * w * mu[:, None]
        den = np.einsum("nkl,ln->kn", g2, uw)  # interference-aware quadratic term
        num = mu[:, None] * np.conj(H) * u * w
        num2 = np.abs(num) ** 2

        def power_at(lam):
            d = den + lam[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                contrib = np.where(num2 > 0, num2 / d**2, 0.0)
            return contrib.sum(axis=1)

        lam = _bisect_power_multiplier(power_at, ch.budgets)
        v = num / (den + lam[:, None])
        history.append(wsr(v))
        sum_log_w = float(np.log(w).sum())
        metric = np.inf if w_prev is None else abs(np.log(w).sum() - np.log(w_prev).sum())
        w_prev = w
        if metric <= eps:
            converged = True
            reason = "sum log w stalled below eps"
            break
    # refresh the receiver/weight blocks so the returned triple is coherent
    # (u is the MMSE receiver for the final v, w its inverse MSE)
    pv = np.abs(v) ** 2
    recv = np.einsum("nlk,ln->nk", g2, pv).T + 1.0
    u = H * v / recv
    w = 1.0 / np.maximum(1.0 - (np.conj(u) * H * v).real, 1e-12)
    P = np.abs(v) ** 2
    return SolverTrace(
        objective_history=history,
        final=P,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={
            "v": v,
            "u": u,
            "w": w,
            "sum_log_w_loop": sum_log_w,
            "final_rates": rate_parallel(ch, P),
        },
    )


# ---------------------------------------------------------------------------
# WMMSE, MIMO channel
# ---------------------------------------------------------------------------

def _mimo_rates_from_v(ch: MimoChannel, V) -> np.ndarray:
    rates = np.empty(ch.K)
    for k in range(ch.K):
        Nr = ch.antennas[k][1]
        cov = np.eye(Nr, dtype=complex)
        for l in range(ch.K):
            if l == k:
                continue
            hv = ch.gains[l][k] @ V[l]
            cov += hv @ hv.conj().T
        hv = ch.gains[k][k] @ V[k]
        x = np.linalg.solve(cov, hv @ hv.conj().T)
        _, logabsdet = np.linalg.slogdet(np.eye(Nr, dtype=complex) + x)
        rates[k] = logabsdet / LN2
    return rates


def _svd_init(ch: MimoChannel, d) -> list:
    """Leading right singular vectors of each direct channel, equal stream power."""
    V = []
    for k in range(ch.K):
        _, _, vh = np.linalg.svd(ch.gains[k][k])
        cols = vh.conj().T[:, : d[k]]
        V.append(cols * np.sqrt(ch.budgets[k] / d[k]))
    return V


def wmmse_mimo(
    ch: MimoChannel,
    weights=None,
    d=None,
    eps: float = 0.01,
    max_iter: int = 500,
    v_init=None,
) -> SolverTrace:
    """Weighted-MMSE block updates for the MIMO IC.

    Matrix updates per user; the transmit update solves its regularized
    linear system through an eigendecomposition of the Hermitian quadratic
    term so the budget bisection reduces to evaluating a scalar monotone
    function of the multiplier.  A singular weight-update inverse (within
    1e-12) is regularized by 1e-12 I and the event counted in the trace.
    """
    if max_iter < 1:
        raise ParameterError("max_iter must be >= 1")
    K = ch.K
    mu = _weights(weights, K)
    if d is None:
        d = tuple(min(m, n) for m, n in ch.antennas)
    d = tuple(int(x) for x in d)
    if len(d) != K:
        raise DimensionError(f"need {K} stream counts, got {len(d)}")
    for k, (dk, (m, n)) in enumerate(zip(d, ch.antennas)):
        if dk < 1 or dk > min(m, n):
            raise DimensionError(
                f"user {k}: d={dk} not in [1, min(M, N)] = [1, {min(m, n)}]"
            )
    if v_init is None:
        V = _svd_init(ch, d)
    else:
        V = [np.asarray(vk, dtype=complex).copy() for vk in v_init]
        for k, vk in enumerate(V):
            if vk.shape != (ch.antennas[k][0], d[k]):
                raise DimensionError(
                    f"v_init[{k}] must have shape ({ch.antennas[k][0]}, {d[k]})"
                )

    def wsr(V):
        return float(mu @ _mimo_rates_from_v(ch, V))

    history = [wsr(V)]
    U = [None] * K
    W = [None] * K
    logdet_prev = None
    regularizations = 0
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        for k in range(K):
            Nr = ch.antennas[k][1]
            cov = np.eye(Nr, dtype=complex)
            for l in range(K):
                hv = ch.gains[l][k] @ V[l]
                cov += hv @ hv.conj().T
            U[k] = np.linalg.solve(cov, ch.gains[k][k] @ V[k])
        logdet = 0.0
        for k in range(K):
            E = np.eye(d[k], dtype=complex) - U[k].conj().T @ ch.gains[k][k] @ V[k]
            E = (E + E.conj().T) / 2.0
            sv = np.linalg.svd(E, compute_uv=False)
            if sv.min() < 1e-12 * max(sv.max(), 1.0):
                E = E + 1e-12 * np.eye(d[k])
                regularizations += 1
            W[k] = np.linalg.solve(E, np.eye(d[k], dtype=complex))
            W[k] = (W[k] + W[k].conj().T) / 2.0
            _, ld = np.linalg.slogdet(W[k])
            logdet += ld
        for k in range(K):
            Mk = ch.antennas[k][0]
            J = np.zeros((Mk, Mk), dtype=complex)
            for l in range(K):
                hu = ch.gains[k][l].conj().T @ U[l]
                J += mu[l] * hu @ W[l] @ hu.conj().T
            B = mu[k] * ch.gains[k][k].conj().T @ U[k] @ W[k]
            evals, phi = np.linalg.eigh((J + J.conj().T) / 2.0)
            evals = np.maximum(evals, 0.0)
            G = phi.conj().T @ B
            g_rows = (np.abs(G) ** 2).sum(axis=1)

            def power_at(lam_arr):
                den = (evals + lam_arr[0]) ** 2
                with np.errstate(divide="ignore", invalid="ignore"):
                    contrib = np.where(g_rows > 0, g_rows / den, 0.0)
                return np.array([contrib.sum()])

            lam = _bisect_power_multiplier(power_at, np.array([ch.budgets[k]]))[0]
            V[k] = phi @ (G / (evals + lam)[:, None])
        history.append(wsr(V))
        metric = np.inf if logdet_prev is None else abs(logdet - logdet_prev)
        logdet_prev = logdet
        if metric <= eps:
            converged = True
            reason = "sum log det W stalled below eps"
            break
    # refresh U and W from the final V so the returned triple is coherent
    for k in range(K):
        Nr = ch.antennas[k][1]
        cov = np.eye(Nr, dtype=complex)
        for l in range(K):
            hv = ch.gains[l][k] @ V[l]
            cov += hv @ hv.conj().T
        U[k] = np.linalg.solve(cov, ch.gains[k][k] @ V[k])
        E = np.eye(d[k], dtype=complex) - U[k].conj().T @ ch.gains[k][k] @ V[k]
        E = (E + E.conj().T) / 2.0
        W[k] = np.linalg.solve(E, np.eye(d[k], dtype=complex))
        W[k] = (W[k] + W[k].conj().T) / 2.0
    final = BeamformerSet(V=[vk.copy() for vk in V], U=[uk.copy() for uk in U],
                          W=[wk.copy() for wk in W], d=d)
    return SolverTrace(
        objective_history=history,
        final=final,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={
            "final_rates": _mimo_rates_from_v(ch, V),
            "sum_log_det_w_loop": logdet_prev,
            "w_regularizations": regularizations,
        },
    )


# ---------------------------------------------------------------------------
# CCA: cyclic gradient projection for the MISO IC
# ---------------------------------------------------------------------------

def utility_admissible(spec: UtilitySpec) -> bool:
    """Whether the WMMSE solvers accept this utility.

    Only the (weighted) sum rate is supported: min-rate fails the
    differentiability requirement and the other members of the family would
    need the general inverse-map weight update, which is not implemented.
    """
    return spec.kind == "sum_rate"


def cca_gradient(ch: MisoChannel, spec: UtilitySpec, V) -> np.ndarray:
    """Analytic utility gradient for the real parameterization of V.

    Returns the (K, Nt) complex array whose real/imaginary parts stacked
    per user equal the gradient with respect to the stacked real vector
    (i.e. 2 dU/d conj(v_k)).
    """
    V = np.asarray(V, dtype=complex)
    sinr = sinr_miso(ch, V)
    rates = np.log2(1.0 + sinr)
    du = marginal_utility(spec, rates)
    a = np.einsum("lkt,lt->lk", ch.gains, V)  # a[l, k] = h_lk . v_l
    pw = np.abs(a) ** 2
    own = np.diag(pw)
    npi = 1.0 + pw.sum(axis=0) - own
    scale = du / (LN2 * (1.0 + sinr))
    grad = np.zeros_like(V)
    for k in range(ch.K):
        grad[k] = scale[k] / npi[k] * ch.gains[k, k].conj() * a[k, k]
        for l in range(ch.K):
            if l == k:
                continue
            grad[k] -= (
                scale[l] * sinr[l] / npi[l] * ch.gains[k, l].conj() * a[k, l]
            )
    return 2.0 * grad


def _project_ball(x: np.ndarray, radius_sq: float) -> np.ndarray:
    nrm_sq = float(np.vdot(x, x).real)
    if nrm_sq <= radius_sq:
        return x
    return x * np.sqrt(radius_sq / nrm_sq)


def cca_miso(
    ch: MisoChannel,
    spec: UtilitySpec,
    armijo: Optional[dict] = None,
    tol: float = 1e-6,
    max_iter: int = 500,
) -> SolverTrace:
    """Cyclic coordinate ascent over MISO beamformers for a smooth utility.

    Each user's step direction is the exact maximizer of the linearized
    objective with a proximal term over its power ball (a closed-form radial
    projection), followed by Armijo backtracking on the true utility.
    Terminates when every user's projection direction is shorter than
    ``tol`` within one full cycle.
    """
    if not spec.smooth:
        raise NonSmoothUtilityError("cca_miso requires a smooth utility (not min_rate)")
    armijo = dict(armijo or {})
    c = float(armijo.get("c", 1e-4))
    shrink = float(armijo.get("shrink", 0.5))
    if not (0 < c < 1) or not (0 < shrink < 1):
        raise ParameterError("armijo parameters must lie in (0, 1)")

    hd = np.einsum("kkt->kt", ch.gains)
    V = (
        np.sqrt(ch.budgets)[:, None]
        * hd.conj()
        / np.linalg.norm(hd, axis=1)[:, None]
    )

    def util(V):
        return evaluate(spec, rate_miso(ch, V))

    history = [util(V)]
    converged = False
    reason = "max_iter reached"
    it = 0
    for it in range(1, max_iter + 1):
        max_dir = 0.0
        for k in range(ch.K):
            grad_k = cca_gradient(ch, spec, V)[k]
            target = _project_ball(V[k] + grad_k, ch.budgets[k])
            direction = target - V[k]
            dir_norm = float(np.linalg.norm(direction))
            max_dir = max(max_dir, dir_norm)
            if dir_norm < tol:
                continue
            slope = float(np.vdot(grad_k, direction).real)
            base = util(V)
            alpha = 1.0
            while alpha > 1e-12:
                cand = V.copy()
                cand[k] = V[k] + alpha * direction
                if util(cand) >= base + c * alpha * slope:
                    V = cand
                    break
                alpha *= shrink
        history.append(util(V))
        if max_dir < tol:
            converged = True
            reason = "projection directions below tol"
            break
    return SolverTrace(
        objective_history=history,
        final=V,
        converged=converged,
        iterations=it,
        termination_reason=reason,
        extra={"final_rates": rate_miso(ch, V)},
    )
