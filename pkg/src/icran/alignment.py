"""Linear interference alignment: alternating minimization and feasibility checks.

Alignment asks for orthonormal receive subspaces U_k and transmit subspaces
V_k that zero-force all cross links while keeping each direct link at full
rank d_k.  The alternating scheme minimizes total interference leakage,
each half-step exactly: the optimal subspace on either side is spanned by
the eigenvectors of a Hermitian interference Gram matrix belonging to its
d_k smallest eigenvalues.

Feasibility of a DoF profile is NP-hard to decide in general; the checkers
here implement the known *necessary* inequalities (with exhaustive subset
enumeration for the counting bound) plus the exact rule for the fully
symmetric case.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import MimoChannel
from .errors import CapabilityError, DimensionError, FeasibilityError, ParameterError

__all__ = [
    "DofProfile",
    "AlignmentResult",
    "ResidualReport",
    "FeasibilityChecks",
    "ia_altmin",
    "ia_residual",
    "feasibility_necessary",
    "DofBounds",
    "dof_bounds",
    "symmetric_feasible",
]


@dataclass(frozen=True)
class DofProfile:
    """Requested streams d_k and antenna pairs (M_k, N_k) per user."""

    d: tuple
    antennas: tuple

    def __post_init__(self):
        d = tuple(int(x) for x in self.d)
        antennas = tuple((int(m), int(n)) for m, n in self.antennas)
        if len(d) != len(antennas):
            raise DimensionError("d and antennas must have one entry per user")
        if any(x < 0 for x in d):
            raise DimensionError("stream counts must be nonnegative")
        if any(m < 1 or n < 1 for m, n in antennas):
            raise DimensionError("antenna counts must be >= 1")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "antennas", antennas)

    @property
    def K(self) -> int:
        return len(self.d)


@dataclass
class AlignmentResult:
    U: list
    V: list
    leakage_history: np.ndarray  # one entry per half-step
    residual: float  # max entrywise cross-term magnitude
    rank_ok: bool
    converged: bool
    iterations: int


@dataclass(frozen=True)
class ResidualReport:
    max_crossterm: float
    ranks: tuple
    rank_ok: bool


@dataclass(frozen=True)
class FeasibilityChecks:
    i1: bool
    i2: bool
    counting: bool
    violating_subset: Optional[tuple]

    @property
    def all_pass(self) -> bool:
        return self.i1 and self.i2 and self.counting


def _phase_normalize(cols: np.ndarray) -> np.ndarray:
    """Rotate each column so its first significant entry is real positive."""
    out = cols.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = np.flatnonzero(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))
        if idx.size:
            pivot = col[idx[0]]
            out[:, j] = col * (np.conj(pivot) / abs(pivot))
    return out


def _smallest_eigvecs(gram: np.ndarray, d: int) -> np.ndarray:
    gram = (gram + gram.conj().T) / 2.0
    _, vecs = np.linalg.eigh(gram)  # ascending eigenvalues
    return _phase_normalize(vecs[:, :d])


def _check_profile(ch: MimoChannel, profile: DofProfile):
    if profile.K != ch.K:
        raise DimensionError("profile and channel must have the same user count")
    if profile.antennas != ch.antennas:
        raise DimensionError("profile antennas disagree with the channel")
    for k, (dk, (m, n)) in enumerate(zip(profile.d, profile.antennas)):
        if dk > min(m, n):
            raise DimensionError(f"user {k}: d={dk} exceeds min(M, N)={min(m, n)}")


def _interference_grams(ch: MimoChannel, V, weights):
    """Receiver-side Grams Q_k = sum_{j != k} w_j H_jk V_j V_j^H H_jk^H."""
    K = ch.K
    grams = []
    for k in range(K):
        q = np.zeros((ch.antennas[k][1], ch.antennas[k][1]), dtype=complex)
        for j in range(K):
            if j == k:
                continue
            hv = ch.gains[j][k] @ V[j]
            q += weights[j] * (hv @ hv.conj().T)
        grams.append(q)
    return grams


def _total_leakage(ch: MimoChannel, U, V, weights) -> float:
    total = 0.0
    for k, q in enumerate(_interference_grams(ch, V, weights)):
        total += float(np.trace(U[k].conj().T @ q @ U[k]).real)
    return total


def ia_altmin(
    ch: MimoChannel,
    profile: DofProfile,
    powers=None,
    max_iter: int = 10_000,
    tol: float = 1e-10,
    check_feasibility: bool = True,
    seed: Optional[int] = None,
) -> AlignmentResult:
    """Alternating leakage minimization for linear interference alignment.

    Receiver step: U_k spans the d_k smallest eigenvectors of its
    interference Gram; transmitter step is the mirror update through the
    conjugated channels.  Both half-steps are exact minimizers of the total
    leakage, so the recorded history is nonincreasing.  Stops when the total
    leakage falls below ``tol``.  Non-convergence returns a result with
    ``converged=False`` (the expected outcome on infeasible profiles; there
    is no convergence guarantee even on feasible ones).

    Stream powers default to 1 per user; zero-forcing is invariant to their
    scale, they only reweight the leakage metric.  ``seed`` switches the
    deterministic SVD-based start to a random orthonormal one.
    """
    _check_profile(ch, profile)
    if check_feasibility:
        checks = feasibility_necessary(profile)
        if not checks.all_pass:
            failed = [
                name
                for name, ok in (("I1", checks.i1), ("I2", checks.i2), ("counting", checks.counting))
                if not ok
            ]
            raise FeasibilityError(
                "DoF profile fails necessary conditions: " + ", ".join(failed)
            )
    K = ch.K
    d = profile.d
    if powers is None:
        powers = np.ones(K)
    powers = np.asarray(powers, dtype=float)
    if powers.shape != (K,) or np.any(powers <= 0):
        raise ParameterError("powers must be K positive reals")
    weights = powers / np.asarray(d, dtype=float)

    if seed is None:
        V = []
        for k in range(K):
            _, _, vh = np.linalg.svd(ch.gains[k][k])
            V.append(_phase_normalize(vh.conj().T[:, : d[k]]))
    else:
        rng = np.random.default_rng(seed)
        V = []
        for k in range(K):
            raw = rng.standard_normal((ch.antennas[k][0], d[k])) + 1j * rng.standard_normal(
                (ch.antennas[k][0], d[k])
            )
            q, _ = np.linalg.qr(raw)
            V.append(_phase_normalize(q[:, : d[k]]))
    U = [np.zeros((ch.antennas[k][1], d[k]), dtype=complex) for k in range(K)]

    history = []
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grams = _interference_grams(ch, V, weights)
        U = [_smallest_eigvecs(grams[k], d[k]) for k in range(K)]
        leak = _total_leakage(ch, U, V, weights)
        history.append(leak)
        if leak < tol:
            converged = True
            break
        for j in range(K):
            gram = np.zeros((ch.antennas[j][0], ch.antennas[j][0]), dtype=complex)
            for k in range(K):
                if k == j:
                    continue
                hu = ch.gains[j][k].conj().T @ U[k]
                gram += hu @ hu.conj().T
            V[j] = _smallest_eigvecs(weights[j] * gram, d[j])
        leak = _total_leakage(ch, U, V, weights)
        history.append(leak)
        if leak < tol:
            converged = True
            break
    report = ia_residual(ch, U, V, profile)
    return AlignmentResult(
        U=U,
        V=V,
        leakage_history=np.asarray(history),
        residual=report.max_crossterm,
        rank_ok=report.rank_ok,
        converged=converged,
        iterations=iterations,
    )


def ia_residual(ch: MimoChannel, U, V, profile: DofProfile) -> ResidualReport:
    """Verify the zero-forcing and rank conditions for given beamformers."""
    _check_profile(ch, profile)
    K = ch.K
    max_cross = 0.0
    for k in range(K):
        for j in range(K):
            if j == k:
                continue
            cross = U[k].conj().T @ ch.gains[j][k] @ V[j]
            if cross.size:
                max_cross = max(max_cross, float(np.abs(cross).max()))
    ranks = []
    for k in range(K):
        direct = U[k].conj().T @ ch.gains[k][k] @ V[k]
        sv = np.linalg.svd(direct, compute_uv=False)
        ranks.append(int(np.sum(sv > 1e-8 * sv.max())) if sv.size else 0)
    rank_ok = all(r == dk for r, dk in zip(ranks, profile.d))
    return ResidualReport(max_crossterm=max_cross, ranks=tuple(ranks), rank_ok=rank_ok)


def feasibility_necessary(profile: DofProfile) -> FeasibilityChecks:
    """Necessary alignment conditions, with exhaustive counting over subsets.

    Checks per-user stream limits, pairwise antenna bounds, and the
    variable-versus-constraint counting inequality over every subset of the
    cross-link index set J = {(k, j) : k != j}.  Subsets are enumerated in
    increasing bitmask order over lexicographically sorted pairs and the
    first violator is reported.  Raises ``CapabilityError`` when |J| > 20
    rather than silently sampling.
    """
    K = profile.K
    d = np.asarray(profile.d, dtype=np.int64)
    M = np.asarray([m for m, _ in profile.antennas], dtype=np.int64)
    N = np.asarray([n for _, n in profile.antennas], dtype=np.int64)

    i1 = bool(np.all(np.minimum(M, N) >= d))
    i2 = True
    for k in range(K):
        for j in range(K):
            if j == k:
                continue
            if max(M[k], N[j]) < d[k] + d[j]:
                i2 = False

    pairs = [(k, j) for k in range(K) for j in range(K) if k != j]
    npairs = len(pairs)
    if npairs > 20:
        raise CapabilityError(
            f"counting check enumerates 2^{npairs} subsets; only K(K-1) <= 20 supported"
        )
    tx_gain = (M - d) * d  # contributed once per distinct transmitter in the subset
    rx_gain = (N - d) * d
    pair_cost = np.array([d[k] * d[j] for k, j in pairs], dtype=np.int64)

    violating = None
    total = 1 << npairs
    chunk = 1 << 16
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        member = ((masks[:, None] >> np.arange(npairs)) & 1).astype(bool)
        rhs = member @ pair_cost
        lhs = np.zeros(masks.size, dtype=np.int64)
        for user in range(K):
            tx_cols = [i for i, (k, _) in enumerate(pairs) if k == user]
            rx_cols = [i for i, (_, j) in enumerate(pairs) if j == user]
            if tx_cols:
                lhs += tx_gain[user] * member[:, tx_cols].any(axis=1)
            if rx_cols:
                lhs += rx_gain[user] * member[:, rx_cols].any(axis=1)
        bad = np.flatnonzero(lhs < rhs)
        if bad.size:
            mask = int(masks[bad[0]])
            violating = tuple(pairs[i] for i in range(npairs) if (mask >> i) & 1)
            break
    return FeasibilityChecks(
        i1=i1, i2=i2, counting=violating is None, violating_subset=violating
    )


@dataclass(frozen=True)
class DofBounds:
    equal_d_bound: float
    sum_bound: Optional[float]


def dof_bounds(profile: DofProfile) -> DofBounds:
    """Upper bounds implied by the counting condition.

    ``equal_d_bound`` limits a common per-user DoF d; ``sum_bound`` is the
    strict bound on the total DoF when every user has the same M_k + N_k
    (None otherwise).
    """
    K = profile.K
    M = np.asarray([m for m, _ in profile.antennas], dtype=float)
    N = np.asarray([n for _, n in profile.antennas], dtype=float)
    equal_d = float((M + N).sum() / (K * (K + 1)))
    totals = M + N
    sum_bound = float(totals[0]) if np.all(totals == totals[0]) else None
    return DofBounds(equal_d_bound=equal_d, sum_bound=sum_bound)


def symmetric_feasible(M: int, d: int, K: int) -> bool:
    """Exact feasibility rule for the fully symmetric square case: 2M >= d(K+1)."""
    if M < 1 or d < 0 or K < 1:
        raise ParameterError("need M >= 1, d >= 0, K >= 1")
    return 2 * M >= d * (K + 1)
