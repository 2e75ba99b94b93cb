"""Two-user rate-region frontiers, convexity checks, and NE efficiency.

The directly achievable region of a 2-user scalar IC is traced by sweeping
one transmitter's power while the other stays at full power; time sharing
convexifies it.  The 2-user MISO Pareto boundary is swept through convex
combinations of maximum-ratio and zero-forcing beamformers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import MisoChannel, ParallelChannel, ScalarChannel, rate_miso, rate_scalar
from .errors import DegenerateChannelError, DimensionError, ParameterError

__all__ = [
    "RegionSample",
    "frontier_2user",
    "frontier_curve_phi1",
    "frontier_curve_phi2",
    "brute_force_region",
    "ConvexityReport",
    "convexity_2user",
    "timeshare_hull",
    "graham_hull",
    "NeEfficiency",
    "ne_efficiency_2user",
    "miso_pareto_2user",
    "fdma_optimality_check",
    "region_to_csv",
]


@dataclass
class RegionSample:
    """Sampled rate pairs with provenance labels and their time-sharing hull."""

    points: np.ndarray  # (M, 2) rate pairs, bits
    labels: list
    hull: np.ndarray  # ordered (counterclockwise) hull vertices

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise DimensionError("points must be (M, 2)")
        if np.any(pts < -1e-12):
            raise DimensionError("rates must be nonnegative")
        self.points = pts


def _require_2user(ch):
    if ch.K != 2:
        raise DimensionError(f"this operation needs K = 2, got K = {ch.K}")


def graham_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (counterclockwise) by the monotone chain scan."""
    pts = sorted({(float(x), float(y)) for x, y in np.asarray(points, dtype=float)})
    if len(pts) <= 2:
        return np.asarray(pts, dtype=float)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) > 1 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) > 1 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=float)


def timeshare_hull(points: np.ndarray) -> np.ndarray:
    """Hull of the sampled rates plus the origin and the axis intercepts."""
    pts = np.asarray(points, dtype=float)
    extras = np.array(
        [[0.0, 0.0], [pts[:, 0].max(), 0.0], [0.0, pts[:, 1].max()]]
    )
    return graham_hull(np.vstack([pts, extras]))


def frontier_2user(ch: ScalarChannel, grid_size: int = 512) -> RegionSample:
    """Directly achievable frontier: two full-power edge sweeps.

    Edge 1 fixes p1 at its budget and sweeps p2; edge 2 is symmetric.  The
    returned hull is the time-sharing boundary of all sampled points.
    """
    _require_2user(ch)
    if grid_size < 2:
        raise ParameterError("grid_size must be >= 2")
    p1bar, p2bar = ch.budgets
    sweep = np.linspace(0.0, 1.0, grid_size)
    pts = []
    labels = []
    for t in sweep:
        pts.append(rate_scalar(ch, np.array([p1bar, t * p2bar])))
        labels.append("edge_p1max")
    for t in sweep:
        pts.append(rate_scalar(ch, np.array([t * p1bar, p2bar])))
        labels.append("edge_p2max")
    pts = np.asarray(pts)
    return RegionSample(points=pts, labels=labels, hull=timeshare_hull(pts))


def _squared(ch: ScalarChannel):
    g = np.abs(ch.gains) ** 2
    return g[0, 0], g[1, 1], g[0, 1], g[1, 0]  # |H11|^2, |H22|^2, |H12|^2, |H21|^2


def frontier_curve_phi1(ch: ScalarChannel, r1) -> np.ndarray:
    """R2 as a function of R1 along the p1-at-full-power edge (closed form)."""
    _require_2user(ch)
    g11, g22, g12, g21 = _squared(ch)
    if g21 <= 0:
        raise DegenerateChannelError("phi1 is undefined without cross gain H21")
    p1bar, p2bar = ch.budgets
    s = np.exp2(np.asarray(r1, dtype=float)) - 1.0
    num = (g22 / g21) * (g11 * p1bar - s)
    den = s * (1.0 + g12 * p1bar)
    return np.log2(1.0 + num / den)


def frontier_curve_phi2(ch: ScalarChannel, r1) -> np.ndarray:
    """R2 as a function of R1 along the p2-at-full-power edge (closed form)."""
    _require_2user(ch)
    g11, g22, g12, g21 = _squared(ch)
    p1bar, p2bar = ch.budgets
    s = np.exp2(np.asarray(r1, dtype=float)) - 1.0
    den = 1.0 + (g12 / g11) * (1.0 + g21 * p2bar) * s
    return np.log2(1.0 + g22 * p2bar / den)


def brute_force_region(ch: ScalarChannel, grid: int = 200) -> np.ndarray:
    """Rate pairs on a full (p1, p2) grid; the oracle cloud for region tests."""
    _require_2user(ch)
    p1 = np.linspace(0.0, ch.budgets[0], grid)
    p2 = np.linspace(0.0, ch.budgets[1], grid)
    g = np.abs(ch.gains) ** 2
    P1, P2 = np.meshgrid(p1, p2, indexing="ij")
    r1 = np.log2(1.0 + g[0, 0] * P1 / (1.0 + g[1, 0] * P2))
    r2 = np.log2(1.0 + g[1, 1] * P2 / (1.0 + g[0, 1] * P1))
    return np.column_stack([r1.ravel(), r2.ravel()])


@dataclass(frozen=True)
class ConvexityReport:
    convex: bool
    necessary_holds: bool
    necessary_holds_squared: bool
    max_stencil: float


def _curve_stencils(curve, r_lo, r_hi, num_h):
    """Three-point second-difference samples with a half-step consistency check."""
    span = r_hi - r_lo
    if span <= 0:
        return np.zeros(1)
    h = 1e-3 * span
    xs = np.linspace(r_lo + 2 * h, r_hi - 2 * h, num_h)
    if xs.size == 0 or xs[0] >= xs[-1]:
        return np.zeros(1)

    def stencil(step):
        return (curve(xs + step) - 2.0 * curve(xs) + curve(xs - step)) / step**2

    coarse = stencil(h)
    fine = stencil(h / 2.0)
    # keep the finer estimate wherever the two agree; a disagreement marks
    # numerical noise, resolved toward the coarse value
    agree = np.abs(fine - coarse) <= 0.25 * np.abs(coarse) + 1e-7
    return np.where(agree, fine, coarse)


def convexity_2user(ch: ScalarChannel, num_h: int = 40) -> ConvexityReport:
    """Numerical convexity of the directly achievable region.

    The region is convex when both frontier curves are concave in R1; each
    curve's second derivative is sampled with adaptive three-point stencils.
    ``necessary_holds`` evaluates the printed small-interference inequality
    verbatim (which carries an unsquared |H22| in its last factor);
    ``necessary_holds_squared`` is the same test with |H22|^2.
    """
    _require_2user(ch)
    g11, g22, g12, g21 = _squared(ch)
    p1bar, p2bar = ch.budgets
    stencils = []
    if g21 > 0:
        r1_full = np.log2(1.0 + g11 * p1bar)
        r1_min = np.log2(1.0 + g11 * p1bar / (1.0 + g21 * p2bar))
        stencils.append(
            _curve_stencils(lambda r: frontier_curve_phi1(ch, r), r1_min, r1_full, num_h)
        )
    r1_hi = np.log2(1.0 + g11 * p1bar / (1.0 + g21 * p2bar))
    stencils.append(
        _curve_stencils(lambda r: frontier_curve_phi2(ch, r), 0.0, r1_hi, num_h)
    )
    max_stencil = float(max(s.max() for s in stencils))
    pbar = p1bar  # the printed inequality is stated for a common budget
    necessary = g22 * g12 * pbar * (1.0 + g21 * pbar) - g11 * (1.0 + np.sqrt(g22) * pbar)
    necessary_sq = g22 * g12 * pbar * (1.0 + g21 * pbar) - g11 * (1.0 + g22 * pbar)
    return ConvexityReport(
        convex=bool(max_stencil < 1e-8),
        necessary_holds=bool(necessary < 0),
        necessary_holds_squared=bool(necessary_sq < 0),
        max_stencil=max_stencil,
    )


@dataclass(frozen=True)
class NeEfficiency:
    ne_rates: tuple
    ne_sum: float
    best_timeshare_sum: float
    gap: float


def ne_efficiency_2user(ch: ScalarChannel, grid_size: int = 512) -> NeEfficiency:
    """Compare the full-power Nash equilibrium with the best time-sharing sum rate.

    In the rate game each user's best response is full power regardless of
    the other, so the unique NE is (p1bar, p2bar).  The best time-sharing
    sum rate is attained at a vertex of the hull.
    """
    _require_2user(ch)
    ne_rates = rate_scalar(ch, ch.budgets.copy())
    ne_sum = float(ne_rates.sum())
    sample = frontier_2user(ch, grid_size)
    best = float(sample.hull.sum(axis=1).max())
    return NeEfficiency(
        ne_rates=tuple(float(r) for r in ne_rates),
        ne_sum=ne_sum,
        best_timeshare_sum=best,
        gap=best - ne_sum,
    )


def _unit(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x)


def miso_pareto_2user(ch: MisoChannel, lam_grid: int = 101) -> RegionSample:
    """Pareto boundary sweep for the 2-user MISO IC.

    Each user's beamformer is the normalized convex combination of its
    maximum-ratio and zero-forcing directions, scaled to use the full power
    budget (||v_k||^2 = budget_k).  The (lam1, lam2) grid covers the whole
    boundary; dominated grid points are filtered out.
    """
    _require_2user(ch)
    if ch.Nt < 2:
        raise DimensionError("MISO Pareto sweep needs Nt >= 2")
    if lam_grid < 2:
        raise ParameterError("lam_grid must be >= 2")

    dirs = []
    for k in range(2):
        other = 1 - k
        own = ch.gains[k, k].conj()
        crossed = ch.gains[k, other].conj()  # channel user k leaks into
        mrt = _unit(own)
        proj = own - (np.vdot(crossed, own) / np.vdot(crossed, crossed)) * crossed
        if np.linalg.norm(proj) < 1e-12 * np.linalg.norm(own):
            raise DegenerateChannelError(
                f"user {k}: direct and cross channels are parallel, ZF direction vanishes"
            )
        dirs.append((mrt, _unit(proj)))

    lams = np.linspace(0.0, 1.0, lam_grid)
    beams = []
    for k in range(2):
        mrt, zf = dirs[k]
        combo = lams[:, None] * zf[None, :] + (1.0 - lams)[:, None] * mrt[None, :]
        combo /= np.linalg.norm(combo, axis=1)[:, None]
        beams.append(np.sqrt(ch.budgets[k]) * combo)

    pts = np.empty((lam_grid * lam_grid, 2))
    idx = 0
    for i in range(lam_grid):
        for j in range(lam_grid):
            V = np.stack([beams[0][i], beams[1][j]])
            pts[idx] = rate_miso(ch, V)
            idx += 1

    order = np.lexsort((-pts[:, 1], -pts[:, 0]))  # R1 desc, R2 desc
    pareto = []
    best_r2 = -np.inf
    for i in order:
        if pts[i, 1] > best_r2 + 1e-15:
            pareto.append(pts[i])
            best_r2 = pts[i, 1]
    pareto = np.asarray(pareto[::-1])  # ascending R1
    return RegionSample(
        points=pareto,
        labels=["miso_pareto"] * len(pareto),
        hull=timeshare_hull(pareto),
    )


def fdma_optimality_check(ch: ParallelChannel, C: int) -> bool:
    """Strong-interference test under which only FDMA attains the max sum rate.

    ``C`` is the minimum number of subchannels any user occupies.  For two
    users the per-tone product of the normalized cross gains must exceed
    (1 + 1/(C-1))^2 / 4 strictly; for more users each normalized cross gain
    must additionally exceed 1/2.  All inequalities strict, evaluated
    verbatim over every tone and ordered user pair.
    """
    if C < 2:
        raise ParameterError("C must be >= 2")
    g = np.abs(ch.gains) ** 2
    direct = np.einsum("nkk->nk", g)
    ratio = g / direct[:, None, :]  # ratio[n, l, k] = |H_lk|^2 / |H_kk|^2
    thr = 0.25 * (1.0 + 1.0 / (C - 1)) ** 2
    K = ch.K
    if K == 2:
        prod = ratio[:, 0, 1] * ratio[:, 1, 0]
        return bool(np.all(prod > thr))
    for l in range(K):
        for k in range(K):
            if l == k:
                continue
            if not np.all(ratio[:, l, k] > 0.5):
                return False
            if not np.all(ratio[:, l, k] * ratio[:, k, l] > thr):
                return False
    return True


def region_to_csv(sample: RegionSample, fh) -> None:
    """Write plot-ready rows R1,R2,label (hull vertices labeled 'hull')."""
    fh.write("R1,R2,label\n")
    for (r1, r2), label in zip(sample.points, sample.labels):
        fh.write(f"{r1!r},{r2!r},{label}\n")
    for r1, r2 in sample.hull:
        fh.write(f"{r1!r},{r2!r},hull\n")
