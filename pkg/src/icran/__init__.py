"""Resource allocation algorithms and benchmarks for interference channels.

Subpackages by topic: :mod:`icran.channels` (models and rate evaluators),
:mod:`icran.utilities` (system utilities and gradients),
:mod:`icran.power_control` (scalar power control),
:mod:`icran.waterfilling` (water-filling games and certificates),
:mod:`icran.wsrm` (weighted sum-rate solvers),
:mod:`icran.rate_region` (2-user region characterization),
:mod:`icran.alignment` (linear interference alignment),
:mod:`icran.bench` (seeded experiment harness) and :mod:`icran.cli`.
"""

from . import (
    alignment,
    bench,
    channels,
    power_control,
    rate_region,
    utilities,
    waterfilling,
    wsrm,
)
from .errors import (
    CapabilityError,
    ConfigError,
    DegenerateChannelError,
    DimensionError,
    DomainError,
    FeasibilityError,
    NonSmoothUtilityError,
    ParameterError,
)
from .trace import SolverTrace

__all__ = [
    "alignment",
    "bench",
    "channels",
    "power_control",
    "rate_region",
    "utilities",
    "waterfilling",
    "wsrm",
    "SolverTrace",
    "CapabilityError",
    "ConfigError",
    "DegenerateChannelError",
    "DimensionError",
    "DomainError",
    "FeasibilityError",
    "NonSmoothUtilityError",
    "ParameterError",
]

__version__ = "0.1.0"
