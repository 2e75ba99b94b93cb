"""System utility functions, QoS targets, and finite-difference gradients."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DomainError, NonSmoothUtilityError, ParameterError

__all__ = [
    "UtilitySpec",
    "QosTargets",
    "evaluate",
    "marginal_utility",
    "parse_utility",
    "numeric_gradient",
]

KINDS = ("sum_rate", "proportional_fair", "harmonic", "min_rate", "alpha_fair")


@dataclass(frozen=True)
class UtilitySpec:
    """A member of the alpha-fair family plus the four named specials.

    ``weights`` (positive, default all-ones) enter the sum-rate and
    proportional-fair forms; the harmonic, min-rate, and raw alpha-fair
    expressions are unweighted.
    """

    kind: str
    alpha: float = 0.0
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown utility kind {self.kind!r}")
        if self.kind == "alpha_fair" and not self.alpha >= 0:
            raise ParameterError("alpha must be >= 0")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if any(x <= 0 for x in w):
                raise ParameterError("weights must be positive")
            object.__setattr__(self, "weights", w)

    def weight_vector(self, K: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(K)
        if len(self.weights) != K:
            raise ParameterError(f"expected {K} weights, got {len(self.weights)}")
        return np.asarray(self.weights, dtype=float)

    @property
    def smooth(self) -> bool:
        return self.kind != "min_rate"


@dataclass(frozen=True)
class QosTargets:
    """Optional per-user SINR targets gamma_k and rate targets zeta_k."""

    sinr_targets: Optional[tuple] = None
    rate_targets: Optional[tuple] = None

    def __post_init__(self):
        for name in ("sinr_targets", "rate_targets"):
            val = getattr(self, name)
            if val is None:
                continue
            val = tuple(float(x) for x in val)
            if any(x < 0 for x in val):
                raise ParameterError(f"{name} must be nonnegative")
            object.__setattr__(self, name, val)


def _check_rates(spec: UtilitySpec, rates: np.ndarray):
    if np.any(rates < 0):
        raise DomainError("rates must be nonnegative")
    needs_positive = spec.kind in ("proportional_fair", "harmonic") or (
        spec.kind == "alpha_fair" and spec.alpha > 0
    )
    if needs_positive:
        zero = np.flatnonzero(rates == 0)
        if zero.size:
            raise DomainError(
                f"{spec.kind} utility undefined at zero rate (user {zero[0]})"
            )


def evaluate(spec: UtilitySpec, rates) -> float:
    """Evaluate the utility on a vector of per-user rates (bits)."""
    rates = np.asarray(rates, dtype=float)
    _check_rates(spec, rates)
    mu = spec.weight_vector(rates.size)
    if spec.kind == "sum_rate":
        return float(mu @ rates)
    if spec.kind == "proportional_fair":
        return float(mu @ np.log(rates))
    if spec.kind == "harmonic":
        return float(1.0 / np.sum(1.0 / rates))
    if spec.kind == "min_rate":
        return float(rates.min())
    a = spec.alpha
    if a == 1.0:
        return float(np.sum(np.log(rates)))
    return float(np.sum(rates ** (1.0 - a) / (1.0 - a)))


def marginal_utility(spec: UtilitySpec, rates) -> np.ndarray:
    """dU/dR_k for the smooth utility kinds (min_rate is rejected)."""
    if not spec.smooth:
        raise NonSmoothUtilityError("min_rate is non-smooth; no gradient exists")
    rates = np.asarray(rates, dtype=float)
    _check_rates(spec, rates)
    mu = spec.weight_vector(rates.size)
    if spec.kind == "sum_rate":
        return mu.copy()
    if spec.kind == "proportional_fair":
        return mu / rates
    if spec.kind == "harmonic":
        s = np.sum(1.0 / rates)
        return 1.0 / (s * rates) ** 2
    a = spec.alpha
    if a == 1.0:
        return 1.0 / rates
    return rates ** (-a)


def parse_utility(text: str) -> UtilitySpec:
    """Parse CLI shorthand: sum | propfair | harmonic | minrate | alpha:X."""
    text = text.strip()
    table = {
        "sum": "sum_rate",
        "propfair": "proportional_fair",
        "harmonic": "harmonic",
        "minrate": "min_rate",
    }
    if text in table:
        return UtilitySpec(table[text])
    if text.startswith("alpha:"):
        try:
            alpha = float(text.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad alpha value in {text!r}") from None
        return UtilitySpec("alpha_fair", alpha=alpha)
    raise ConfigError(
        f"unknown utility {text!r}; expected sum, propfair, harmonic, minrate, or alpha:X"
    )


def numeric_gradient(f: Callable, x, h=None) -> np.ndarray:
    """Central-difference gradient, the oracle for analytic gradient checks.

    Per-coordinate step defaults to ``1e-5 * max(1, |x_i|)``.
    """
    x = np.asarray(x, dtype=float)
    if h is None:
        steps = 1e-5 * np.maximum(1.0, np.abs(x))
    else:
        steps = np.full(x.shape, float(h))
    grad = np.empty(x.shape)
    for i in np.ndindex(x.shape):
        e = np.zeros(x.shape)
        e[i] = steps[i]
        grad[i] = (f(x + e) - f(x - e)) / (2.0 * steps[i])
    return grad
