"""Interference channel models, seeded generation, and SINR/rate evaluators.

Conventions used throughout the library:

* ``gains[l, k]`` (``gains[n, l, k]`` per tone, ``gains[l][k]`` for matrix
  channels) is the channel from transmitter ``l`` to receiver ``k``; direct
  links sit on the diagonal ``l == k``.
* Receiver noise power is normalized to 1 everywhere.  The operating SNR
  enters only through the power budgets, ``budget = 10 ** (snr_db / 10)``.
* Rates are in bits, i.e. base-2 logarithms.
* Channel entries are unit-variance complex Gaussians drawn as two
  independent real Gaussian blocks of variance 1/2 from numpy's PCG64
  generator, so a ``(kind, dims, seed)`` triple reproduces bit-identical
  instances on any platform.

All channel types are immutable after construction and every evaluator is a
pure function, so instances can be shared freely across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "ScalarChannel",
    "ParallelChannel",
    "MisoChannel",
    "MimoChannel",
    "gen_channel",
    "sinr_scalar",
    "rate_scalar",
    "sinr_parallel",
    "rate_parallel",
    "sinr_miso",
    "rate_miso",
    "rate_mimo",
    "sinr_mimo_stream",
    "embed_parallel_as_mimo",
    "diag_covariances",
    "validate_power_vector",
    "validate_power_matrix",
    "validate_covariances",
    "channel_to_dict",
    "channel_from_dict",
    "channel_to_json",
    "channel_from_json",
]

LN2 = np.log(2.0)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _check_budgets(budgets, K):
    budgets = np.ascontiguousarray(budgets, dtype=float)
    if budgets.shape != (K,):
        raise DimensionError(f"budgets must have shape ({K},), got {budgets.shape}")
    if not np.all(np.isfinite(budgets)) or np.any(budgets <= 0):
        raise DomainError("budgets must be finite and positive")
    return _freeze(budgets)


@dataclass(frozen=True)
class ScalarChannel:
    """Single-tone interference channel: ``gains[l, k]`` complex, K budgets."""

    gains: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        gains = np.ascontiguousarray(self.gains, dtype=complex)
        if gains.ndim != 2 or gains.shape[0] != gains.shape[1] or gains.shape[0] < 1:
            raise DimensionError(f"gains must be square K x K with K >= 1, got {gains.shape}")
        if not np.all(np.isfinite(gains)):
            raise DomainError("gains must be finite")
        object.__setattr__(self, "gains", _freeze(gains))
        object.__setattr__(self, "budgets", _check_budgets(self.budgets, gains.shape[0]))

    @property
    def K(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class ParallelChannel:
    """K-user channel over N independent tones: ``gains[n, l, k]``."""

    gains: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        gains = np.ascontiguousarray(self.gains, dtype=complex)
        if gains.ndim != 3 or gains.shape[1] != gains.shape[2]:
            raise DimensionError(f"gains must have shape (N, K, K), got {gains.shape}")
        if gains.shape[0] < 1 or gains.shape[1] < 1:
            raise DimensionError("need N >= 1 and K >= 1")
        if not np.all(np.isfinite(gains)):
            raise DomainError("gains must be finite")
        object.__setattr__(self, "gains", _freeze(gains))
        object.__setattr__(self, "budgets", _check_budgets(self.budgets, gains.shape[1]))

    @property
    def K(self) -> int:
        return self.gains.shape[1]

    @property
    def N(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class MisoChannel:
    """Multi-antenna transmitters, scalar receivers: ``gains[l, k]`` is the
    length-Nt row vector from transmitter l to receiver k."""

    gains: np.ndarray
    budgets: np.ndarray

    def __post_init__(self):
        gains = np.ascontiguousarray(self.gains, dtype=complex)
        if gains.ndim != 3 or gains.shape[0] != gains.shape[1]:
            raise DimensionError(f"gains must have shape (K, K, Nt), got {gains.shape}")
        if gains.shape[2] < 1:
            raise DimensionError("need Nt >= 1")
        if not np.all(np.isfinite(gains)):
            raise DomainError("gains must be finite")
        object.__setattr__(self, "gains", _freeze(gains))
        object.__setattr__(self, "budgets", _check_budgets(self.budgets, gains.shape[0]))

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def Nt(self) -> int:
        return self.gains.shape[2]


class MimoChannel:
    """General MIMO interference channel with per-user antenna counts.

    ``gains[l][k]`` is the complex matrix from transmitter l (M_l antennas)
    to receiver k (N_k antennas), shape ``(N_k, M_l)``.  ``antennas[k]`` is
    the pair ``(M_k, N_k)``.
    """

    def __init__(self, antennas, gains, budgets):
        antennas = tuple((int(m), int(n)) for m, n in antennas)
        K = len(antennas)
        if K < 1 or any(m < 1 or n < 1 for m, n in antennas):
            raise DimensionError("need K >= 1 users with >= 1 antenna each")
        if len(gains) != K or any(len(row) != K for row in gains):
            raise DimensionError("gains must be a K x K table of matrices")
        table = []
        for l in range(K):
            row = []
            for k in range(K):
                h = np.ascontiguousarray(gains[l][k], dtype=complex)
                want = (antennas[k][1], antennas[l][0])
                if h.shape != want:
                    raise DimensionError(
                        f"gains[{l}][{k}] must have shape {want}, got {h.shape}"
                    )
                if not np.all(np.isfinite(h)):
                    raise DomainError("gains must be finite")
                row.append(_freeze(h))
            table.append(tuple(row))
        self.antennas = antennas
        self.gains = tuple(table)
        self.budgets = _check_budgets(budgets, K)

    @property
    def K(self) -> int:
        return len(self.antennas)

    def __eq__(self, other):
        if not isinstance(other, MimoChannel):
            return NotImplemented
        return (
            self.antennas == other.antennas
            and np.array_equal(self.budgets, other.budgets)
            and all(
                np.array_equal(self.gains[l][k], other.gains[l][k])
                for l in range(self.K)
                for k in range(self.K)
            )
        )


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) entries: independent real/imaginary parts of variance 1/2."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


def _budgets_from_dims(dims, K):
    budgets = dims.get("budgets", 1.0)
    if np.isscalar(budgets):
        budgets = np.full(K, float(budgets))
    return budgets


def gen_channel(kind: str, dims: dict, seed: int):
    """Draw a random channel instance with i.i.d. CN(0, 1) gains.

    Parameters
    ----------
    kind : {"scalar", "parallel", "miso", "mimo"}
    dims : dict
        Size parameters: ``K`` always; ``N`` (parallel); ``Nt`` (miso);
        ``M``/``N`` or ``antennas`` (mimo).  Optional ``budgets`` (scalar or
        per-user sequence, default 1.0).
    seed : int
        Feeds ``numpy.random.default_rng``; fixed seeds reproduce the
        instance bit-for-bit.
    """
    rng = np.random.default_rng(int(seed))
    K = int(dims.get("K", 0))
    if K < 1:
        raise DimensionError("need K >= 1")
    budgets = _budgets_from_dims(dims, K)

    if kind == "scalar":
        return ScalarChannel(_cn(rng, (K, K)), budgets)
    if kind == "parallel":
        N = int(dims.get("N", 0))
        if N < 1:
            raise DimensionError("need N >= 1 tones")
        return ParallelChannel(_cn(rng, (N, K, K)), budgets)
    if kind == "miso":
        Nt = int(dims.get("Nt", 0))
        if Nt < 1:
            raise DimensionError("need Nt >= 1 transmit antennas")
        return MisoChannel(_cn(rng, (K, K, Nt)), budgets)
    if kind == "mimo":
        if "antennas" in dims:
            antennas = [(int(m), int(n)) for m, n in dims["antennas"]]
        else:
            M, N = int(dims.get("M", 0)), int(dims.get("N", 0))
            if M < 1 or N < 1:
                raise DimensionError("need M >= 1 and N >= 1 antennas")
            antennas = [(M, N)] * K
        if len(antennas) != K:
            raise DimensionError("antennas must list one (M_k, N_k) pair per user")
        # row-major draw order (l outer, k inner) is part of the seed contract
        gains = [
            [_cn(rng, (antennas[k][1], antennas[l][0])) for k in range(K)]
            for l in range(K)
        ]
        return MimoChannel(antennas, gains, budgets)
    raise DimensionError(f"unknown channel kind {kind!r}")


# ---------------------------------------------------------------------------
# power / covariance validation
# ---------------------------------------------------------------------------

def validate_power_vector(ch: ScalarChannel, p, tol: float = 1e-8):
    p = np.asarray(p, dtype=float)
    if p.shape != (ch.K,):
        raise DimensionError(f"power vector must have shape ({ch.K},), got {p.shape}")
    if np.any(p < 0):
        raise DomainError("powers must be nonnegative")
    if np.any(p > ch.budgets * (1.0 + tol) + tol):
        raise DomainError("powers exceed budgets")
    return p


def validate_power_matrix(ch: ParallelChannel, P, tol: float = 1e-8):
    P = np.asarray(P, dtype=float)
    if P.shape != (ch.K, ch.N):
        raise DimensionError(f"power matrix must have shape ({ch.K}, {ch.N}), got {P.shape}")
    if np.any(P < 0):
        raise DomainError("powers must be nonnegative")
    if np.any(P.sum(axis=1) > ch.budgets * (1.0 + tol) + tol):
        raise DomainError("per-user power sums exceed budgets")
    return P


def validate_covariances(ch: MimoChannel, Q, check_budget: bool = True, tol: float = 1e-8):
    """Check Hermitian PSD structure (and optionally the trace budgets)."""
    if len(Q) != ch.K:
        raise DimensionError(f"need {ch.K} covariance matrices, got {len(Q)}")
    out = []
    for k, qk in enumerate(Q):
        qk = np.asarray(qk, dtype=complex)
        M = ch.antennas[k][0]
        if qk.shape != (M, M):
            raise DimensionError(f"Q[{k}] must have shape ({M}, {M}), got {qk.shape}")
        scale = max(1.0, np.abs(qk).max()) if qk.size else 1.0
        if np.abs(qk - qk.conj().T).max() > 1e-10 * scale:
            raise DomainError(f"Q[{k}] is not Hermitian")
        if np.linalg.eigvalsh((qk + qk.conj().T) / 2).min() < -1e-10 * scale:
            raise DomainError(f"Q[{k}] is not positive semidefinite")
        if check_budget and qk.trace().real > ch.budgets[k] * (1.0 + tol) + tol:
            raise DomainError(f"trace(Q[{k}]) exceeds the power budget")
        out.append(qk)
    return out


# ---------------------------------------------------------------------------
# SINR / rate evaluators
# ---------------------------------------------------------------------------

def sinr_scalar(ch: ScalarChannel, p) -> np.ndarray:
    """Per-user SINR ``|H_kk|^2 p_k / (1 + sum_{l != k} |H_lk|^2 p_l)``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (ch.K,):
        raise DimensionError(f"power vector must have shape ({ch.K},), got {p.shape}")
    if np.any(p < 0):
        raise DomainError("powers must be nonnegative")
    g = np.abs(ch.gains) ** 2
    received = g.T @ p  # received[k] = sum_l g[l, k] p[l]
    own = np.diag(g) * p
    return own / (1.0 + received - own)


def rate_scalar(ch: ScalarChannel, p) -> np.ndarray:
    return np.log2(1.0 + sinr_scalar(ch, p))


def sinr_parallel(ch: ParallelChannel, P) -> np.ndarray:
    """Per-tone SINRs, shape (K, N), for a (K, N) power matrix."""
    P = np.asarray(P, dtype=float)
    if P.shape != (ch.K, ch.N):
        raise DimensionError(f"power matrix must have shape ({ch.K}, {ch.N}), got {P.shape}")
    if np.any(P < 0):
        raise DomainError("powers must be nonnegative")
    g = np.abs(ch.gains) ** 2  # (N, K, K)
    received = np.einsum("nlk,ln->nk", g, P)  # at receiver k on tone n
    own = np.einsum("nkk->nk", g) * P.T
    return (own / (1.0 + received - own)).T


def rate_parallel(ch: ParallelChannel, P) -> np.ndarray:
    """Per-user sum rates over tones, in bits."""
    return np.log2(1.0 + sinr_parallel(ch, P)).sum(axis=1)


def sinr_miso(ch: MisoChannel, V) -> np.ndarray:
    """Per-user SINR for beamformers ``V`` of shape (K, Nt)."""
    V = np.asarray(V, dtype=complex)
    if V.shape != (ch.K, ch.Nt):
        raise DimensionError(f"beamformers must have shape ({ch.K}, {ch.Nt}), got {V.shape}")
    a = np.einsum("lkt,lt->lk", ch.gains, V)  # a[l, k] = h_lk . v_l
    pw = np.abs(a) ** 2
    own = np.diag(pw)
    return own / (1.0 + pw.sum(axis=0) - own)


def rate_miso(ch: MisoChannel, V) -> np.ndarray:
    return np.log2(1.0 + sinr_miso(ch, V))


def rate_mimo(ch: MimoChannel, Q) -> np.ndarray:
    """Per-user log-det rates treating other users' signals as noise.

    The interference-plus-noise matrix is applied through a linear solve
    rather than forming its explicit inverse.  Raises ``DomainError`` for
    non-Hermitian or non-PSD covariance inputs.
    """
    Q = validate_covariances(ch, Q, check_budget=False)
    rates = np.empty(ch.K)
    for k in range(ch.K):
        Nr = ch.antennas[k][1]
        cov = np.eye(Nr, dtype=complex)
        for l in range(ch.K):
            if l == k:
                continue
            hl = ch.gains[l][k]
            cov += hl @ Q[l] @ hl.conj().T
        hk = ch.gains[k][k]
        signal = hk @ Q[k] @ hk.conj().T
        x = np.linalg.solve(cov, signal)
        _, logabsdet = np.linalg.slogdet(np.eye(Nr, dtype=complex) + x)
        rates[k] = logabsdet / LN2
    return rates


def sinr_mimo_stream(ch: MimoChannel, U, V) -> list:
    """Per-stream SINRs for transmit/receive beamformer lists.

    For stream s of user k, every other (user, stream) pair counts as
    interference; with one stream per user this is the usual single-stream
    SINR with the ``||u||^2`` noise term.
    """
    K = ch.K
    if len(U) != K or len(V) != K:
        raise DimensionError("U and V must hold one matrix per user")
    U = [np.asarray(u, dtype=complex) for u in U]
    V = [np.asarray(v, dtype=complex) for v in V]
    eff = [[U[k].conj().T @ ch.gains[l][k] @ V[l] for l in range(K)] for k in range(K)]
    out = []
    for k in range(K):
        dk = U[k].shape[1]
        sinrs = np.empty(dk)
        for s in range(dk):
            signal = np.abs(eff[k][k][s, s]) ** 2
            interference = float(np.linalg.norm(U[k][:, s]) ** 2)
            for l in range(K):
                row = np.abs(eff[k][l][s, :]) ** 2
                interference += row.sum()
                if l == k:
                    interference -= row[s]
            sinrs[s] = signal / interference
        out.append(sinrs)
    return out


def embed_parallel_as_mimo(ch: ParallelChannel) -> MimoChannel:
    """Represent a parallel channel as a MIMO channel with diagonal matrices."""
    K, N = ch.K, ch.N
    gains = [[np.diag(ch.gains[:, l, k]) for k in range(K)] for l in range(K)]
    return MimoChannel([(N, N)] * K, gains, ch.budgets)


def diag_covariances(P) -> list:
    """Diagonal covariance set from a (K, N) power matrix."""
    P = np.asarray(P, dtype=float)
    return [np.diag(P[k].astype(complex)) for k in range(P.shape[0])]


# ---------------------------------------------------------------------------
# JSON serialization (bit-exact round trip)
# ---------------------------------------------------------------------------

def _gains_to_pairs(flat: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in flat]


def _pairs_to_complex(pairs) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float)
    return arr[:, 0] + 1j * arr[:, 1]


def channel_to_dict(ch) -> dict:
    """Serializable description: gains as [re, im] pairs in row-major order."""
    if isinstance(ch, ScalarChannel):
        return {
            "kind": "scalar",
            "K": ch.K,
            "budgets": [float(b) for b in ch.budgets],
            "gains": _gains_to_pairs(ch.gains.ravel()),
        }
    if isinstance(ch, ParallelChannel):
        return {
            "kind": "parallel",
            "K": ch.K,
            "N": ch.N,
            "budgets": [float(b) for b in ch.budgets],
            "gains": _gains_to_pairs(ch.gains.ravel()),
        }
    if isinstance(ch, MisoChannel):
        return {
            "kind": "miso",
            "K": ch.K,
            "Nt": ch.Nt,
            "budgets": [float(b) for b in ch.budgets],
            "gains": _gains_to_pairs(ch.gains.ravel()),
        }
    if isinstance(ch, MimoChannel):
        flat = np.concatenate(
            [ch.gains[l][k].ravel() for l in range(ch.K) for k in range(ch.K)]
        )
        return {
            "kind": "mimo",
            "K": ch.K,
            "antennas": [[m, n] for m, n in ch.antennas],
            "budgets": [float(b) for b in ch.budgets],
            "gains": _gains_to_pairs(flat),
        }
    raise DimensionError(f"not a channel instance: {type(ch)!r}")


def channel_from_dict(doc: dict):
    kind = doc["kind"]
    K = int(doc["K"])
    budgets = np.asarray(doc["budgets"], dtype=float)
    flat = _pairs_to_complex(doc["gains"])
    if kind == "scalar":
        return ScalarChannel(flat.reshape(K, K), budgets)
    if kind == "parallel":
        N = int(doc["N"])
        return ParallelChannel(flat.reshape(N, K, K), budgets)
    if kind == "miso":
        Nt = int(doc["Nt"])
        return MisoChannel(flat.reshape(K, K, Nt), budgets)
    if kind == "mimo":
        antennas = [(int(m), int(n)) for m, n in doc["antennas"]]
        gains = []
        pos = 0
        for l in range(K):
            row = []
            for k in range(K):
                size = antennas[k][1] * antennas[l][0]
                row.append(flat[pos : pos + size].reshape(antennas[k][1], antennas[l][0]))
                pos += size
            gains.append(row)
        return MimoChannel(antennas, gains, budgets)
    raise DimensionError(f"unknown channel kind {kind!r}")


def channel_to_json(ch) -> str:
    # json emits shortest-round-trip decimal floats, so loading recovers
    # every gain and budget bit-exactly
    return json.dumps(channel_to_dict(ch))


def channel_from_json(text: str):
    return channel_from_dict(json.loads(text))
