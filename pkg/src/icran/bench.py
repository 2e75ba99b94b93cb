"""Seeded experiment harness for algorithm comparison sweeps.

A single JSON config describes a scenario (channel kind and sizes), an SNR
grid, the algorithms to compare, and a realization count.  Realization r
draws its channel from ``base_seed + r``; power budgets are set from the SNR
point as ``10 ** (snr_db / 10)`` with unit noise.  All numeric outputs are
schedule-invariant: per-realization seeding plus order-independent
aggregation make reruns bitwise identical in every column except wall time.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import waterfilling, wsrm
from .channels import gen_channel, rate_mimo, rate_parallel
from .errors import ConfigError

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "ResultTable",
    "run_experiment",
    "summarize",
    "mean_sorted_pairwise",
    "CSV_COLUMNS",
]

CSV_COLUMNS = (
    "algorithm",
    "snr_db",
    "realization",
    "seed",
    "sum_rate",
    "iterations",
    "wall_time_ms",
    "converged",
)

CONFIG_VERSION = 1


def _parallel_runner(solver):
    def run(ch, params):
        trace = solver(ch, **params)
        return trace, np.asarray(trace.final, dtype=float)

    return run


def _run_iwfa(ch, params):
    trace = waterfilling.iwfa(ch, **params)
    return trace, np.asarray(trace.final, dtype=float)


def _run_wmmse_mimo(ch, params):
    trace = wsrm.wmmse_mimo(ch, **params)
    return trace, trace.final


_ALGORITHMS = {
    "wmmse": ("parallel", _parallel_runner(wsrm.wmmse_parallel)),
    "mdp": ("parallel", _parallel_runner(wsrm.mdp_solve)),
    "scale": ("parallel", _parallel_runner(wsrm.scale_solve)),
    "iwfa": ("parallel", _run_iwfa),
    "wmmse_mimo": ("mimo", _run_wmmse_mimo),
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: dict
    snr_grid: tuple
    algorithms: tuple  # of (name, params) pairs
    realizations: int
    base_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.scenario, dict) or "kind" not in self.scenario:
            raise ConfigError("scenario must be a dict with a 'kind' entry")
        snr = tuple(float(s) for s in self.snr_grid)
        if not snr:
            raise ConfigError("snr_grid must be nonempty")
        object.__setattr__(self, "snr_grid", snr)
        algs = []
        for item in self.algorithms:
            if isinstance(item, str):
                name, params = item, {}
            elif isinstance(item, dict):
                name = item.get("name")
                params = dict(item.get("params", {}))
            else:
                name, params = item
                params = dict(params)
            if name not in _ALGORITHMS:
                raise ConfigError(
                    f"unknown algorithm {name!r}; valid names: {sorted(_ALGORITHMS)}"
                )
            kind_needed = _ALGORITHMS[name][0]
            if kind_needed != self.scenario["kind"]:
                raise ConfigError(
                    f"algorithm {name!r} runs on {kind_needed!r} scenarios, "
                    f"not {self.scenario['kind']!r}"
                )
            algs.append((name, params))
        if not algs:
            raise ConfigError("algorithms list must be nonempty")
        object.__setattr__(self, "algorithms", tuple(algs))
        if int(self.realizations) < 1:
            raise ConfigError("realizations must be >= 1")
        object.__setattr__(self, "realizations", int(self.realizations))
        object.__setattr__(self, "base_seed", int(self.base_seed))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        version = doc.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        try:
            return cls(
                scenario=doc["scenario"],
                snr_grid=doc["snr_grid"],
                algorithms=doc["algorithms"],
                realizations=doc["realizations"],
                base_seed=doc.get("base_seed", 0),
            )
        except KeyError as exc:
            raise ConfigError(f"config is missing the {exc.args[0]!r} field") from None

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "scenario": dict(self.scenario),
            "snr_grid": list(self.snr_grid),
            "algorithms": [{"name": n, "params": dict(p)} for n, p in self.algorithms],
            "realizations": self.realizations,
            "base_seed": self.base_seed,
        }


@dataclass
class ResultRow:
    algorithm: str
    snr_db: float
    realization: int
    seed: int
    sum_rate: float
    iterations: int
    wall_time_ms: float
    converged: bool
    params: dict = field(default_factory=dict)
    objective_history: list = field(default_factory=list)
    final_rates: list = field(default_factory=list)
    final_iterate: object = None


@dataclass
class ResultTable:
    config: ExperimentConfig
    rows: list

    def to_csv(self, fh) -> None:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in self.rows:
            fh.write(
                f"{row.algorithm},{row.snr_db!r},{row.realization},{row.seed},"
                f"{row.sum_rate!r},{row.iterations},{row.wall_time_ms!r},"
                f"{str(row.converged).lower()}\n"
            )

    def to_json(self, fh) -> None:
        doc = {
            "version": CONFIG_VERSION,
            "config": self.config.to_dict(),
            "rows": [
                {
                    "algorithm": r.algorithm,
                    "seed": r.seed,
                    "params": r.params,
                    "snr_db": r.snr_db,
                    "realization": r.realization,
                    "sum_rate": r.sum_rate,
                    "objective_history": r.objective_history,
                    "final_rates": r.final_rates,
                    "final_iterate": _iterate_to_jsonable(r.final_iterate),
                    "iterations": r.iterations,
                    "wall_time_ms": r.wall_time_ms,
                    "converged": r.converged,
                }
                for r in self.rows
            ],
        }
        json.dump(doc, fh)


def _iterate_to_jsonable(final):
    if final is None:
        return None
    if isinstance(final, np.ndarray):
        return final.tolist()
    if isinstance(final, wsrm.BeamformerSet):
        return {
            "V": [[[float(z.real), float(z.imag)] for z in vk.ravel()] for vk in final.V],
            "shapes": [list(vk.shape) for vk in final.V],
            "d": list(final.d),
        }
    return final


def _channel_dims(cfg: ExperimentConfig, snr_db: float) -> dict:
    dims = {k: v for k, v in cfg.scenario.items() if k != "kind"}
    dims["budgets"] = 10.0 ** (snr_db / 10.0)
    return dims


def _final_rates(cfg_kind: str, ch, trace, final):
    if isinstance(final, wsrm.BeamformerSet):
        Q = [vk @ vk.conj().T for vk in final.V]
        return rate_mimo(ch, Q)
    return rate_parallel(ch, final)


def _run_single(cfg: ExperimentConfig, name: str, params: dict, snr_db: float, r: int):
    kind = cfg.scenario["kind"]
    seed = cfg.base_seed + r
    ch = gen_channel(kind, _channel_dims(cfg, snr_db), seed)
    runner = _ALGORITHMS[name][1]
    start = time.perf_counter()
    trace, final = runner(ch, params)
    wall_ms = (time.perf_counter() - start) * 1e3
    rates = _final_rates(kind, ch, trace, final)
    return ResultRow(
        algorithm=name,
        snr_db=snr_db,
        realization=r,
        seed=seed,
        sum_rate=float(rates.sum()),
        iterations=trace.iterations,
        wall_time_ms=wall_ms,
        converged=trace.converged,
        params=params,
        objective_history=[float(x) for x in trace.objective_history],
        final_rates=[float(x) for x in rates],
        final_iterate=final,
    )


def _max_workers() -> int:
    raw = os.environ.get("ICRAN_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        return min(8, os.cpu_count() or 1)
    return n


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    """Run every (algorithm, snr, realization) cell of the config.

    Cells are independent and may execute concurrently (worker count capped
    by ``ICRAN_THREADS``, 0 = auto); rows are emitted in sorted task order,
    so the numeric columns are identical across reruns and schedules.
    """
    tasks = [
        (name, params, snr, r)
        for name, params in cfg.algorithms
        for snr in cfg.snr_grid
        for r in range(cfg.realizations)
    ]
    workers = _max_workers()
    if workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(
                pool.map(lambda t: _run_single(cfg, t[0], t[1], t[2], t[3]), tasks)
            )
    else:
        rows = [_run_single(cfg, *t) for t in tasks]
    return ResultTable(config=cfg, rows=rows)


def _pairwise_sum(vals, lo, hi):
    if hi - lo == 1:
        return vals[lo]
    mid = (lo + hi) // 2
    return _pairwise_sum(vals, lo, mid) + _pairwise_sum(vals, mid, hi)


def mean_sorted_pairwise(values) -> float:
    """Order-independent mean: sort, then sum by balanced pairwise reduction."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("mean of empty sequence")
    return _pairwise_sum(vals, 0, len(vals)) / len(vals)


def summarize(table: ResultTable) -> list:
    """Per (algorithm, snr) mean sum rates using the order-independent mean."""
    keys = sorted({(r.algorithm, r.snr_db) for r in table.rows})
    out = []
    for name, snr in keys:
        vals = [r.sum_rate for r in table.rows if r.algorithm == name and r.snr_db == snr]
        out.append(
            {
                "algorithm": name,
                "snr_db": snr,
                "mean_sum_rate": mean_sorted_pairwise(vals),
                "realizations": len(vals),
            }
        )
    return out
