"""Monte-Carlo size/power experiments over simulation scenarios.

Replicate ``r`` of a scenario draws its data from ``stream(seed, 0, r)`` and
seeds its bootstrap with ``derive_seed(seed, 1, r)``. The streams do not
depend on theta or on the worker count, so power curves use common random
numbers and results are identical whether run serially or in a process pool.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .datagen import Scenario, scenario_build
from .errors import BadBudget
from .fanova import CurveSet, project_curves
from .inference import TestConfig, run_test
from .stats import derive_seed, stream

# Reference empirical sizes (rho = 0.05) for the data-driven-tau procedure.
REFERENCE_SIZES = {
    "fda-M1-common-balanced": 0.051, "fda-M1-common-unbalanced": 0.053,
    "fda-M2-common-balanced": 0.042, "fda-M2-common-unbalanced": 0.057,
    "fda-M3-common-balanced": 0.057, "fda-M3-common-unbalanced": 0.056,
    "fda-M4-common-balanced": 0.046, "fda-M4-common-unbalanced": 0.053,
    "fda-M1-specific-balanced": 0.055, "fda-M1-specific-unbalanced": 0.043,
    "fda-M2-specific-balanced": 0.056, "fda-M2-specific-unbalanced": 0.052,
    "fda-M3-specific-balanced": 0.051, "fda-M3-specific-unbalanced": 0.049,
    "fda-M4-specific-balanced": 0.052, "fda-M4-specific-unbalanced": 0.050,
    "pois-sparse-p25-balanced": 0.055, "pois-sparse-p25-unbalanced": 0.052,
    "pois-sparse-p100-balanced": 0.056, "pois-sparse-p100-unbalanced": 0.056,
    "pois-dense-p25-balanced": 0.050, "pois-dense-p25-unbalanced": 0.045,
    "pois-dense-p100-balanced": 0.057, "pois-dense-p100-unbalanced": 0.051,
}

TABLES = {
    "size-fda": [f"fda-M{i}-{c}-{d}" for c in ("common", "specific") for i in range(1, 5)
                 for d in ("balanced", "unbalanced")],
    "size-pois": [f"pois-{pat}-p{p}-{d}" for pat in ("sparse", "dense") for p in (25, 100)
                  for d in ("balanced", "unbalanced")],
}


@dataclass(frozen=True)
class Budget:
    reps: int = 1000
    B: int = 1000
    tau: Union[float, str] = 0.8
    rho: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.reps < 1:
            raise BadBudget(f"replicate count must be positive, got {self.reps}")
        if self.B < 1:
            raise BadBudget(f"bootstrap count must be positive, got {self.B}")

    def apply(self, scenario: Scenario) -> Scenario:
        cfg = replace(scenario.config, tau=self.tau, B=self.B, rho=self.rho)
        return replace(scenario, config=cfg, reps=self.reps, seed=self.seed)


@dataclass
class ExperimentResult:
    scenario: str
    reps: int
    rejections: int
    rejection_rate: float
    mc_se: float
    tau_mean: float
    tau_sd: float
    records: list[dict]
    power_curve: list[dict] | None = None
    seconds_per_rep: float = float("nan")
    config: dict = field(default_factory=dict)

    def to_dict(self, include_timing: bool = False) -> dict:
        d = {
            "scenario": self.scenario,
            "reps": self.reps,
            "rejections": self.rejections,
            "rejection_rate": self.rejection_rate,
            "mc_se": self.mc_se,
            "tau_mean": self.tau_mean,
            "tau_sd": self.tau_sd,
            "config": self.config,
        }
        if self.power_curve is not None:
            d["power_curve"] = self.power_curve
        if include_timing:
            d["seconds_per_rep"] = self.seconds_per_rep
        return d


def binomial_se(rate: float, reps: int) -> float:
    return math.sqrt(max(rate * (1.0 - rate), 0.0) / reps)


def run_replicate(scenario: Scenario, rep: int) -> dict:
    data = scenario.sample(stream(scenario.seed, 0, rep))
    if isinstance(data, CurveSet):
        data = project_curves(data, scenario.basis)
    cfg = replace(scenario.config, seed=derive_seed(scenario.seed, 1, rep), workers=1)
    t0 = time.perf_counter()
    res = run_test(data, cfg)
    return {
        "scenario": scenario.name,
        "theta": scenario.theta,
        "rep_index": rep,
        "reject": res.reject,
        "p_value": res.p_value,
        "tau": res.tau_used,
        "_seconds": time.perf_counter() - t0,
    }


def _run_reps(scenario: Scenario, workers: int) -> list[dict]:
    reps = range(scenario.reps)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(run_replicate, [scenario] * scenario.reps, reps,
                               chunksize=max(1, scenario.reps // (4 * workers))))
    return [run_replicate(scenario, r) for r in reps]


def summarize(name: str, records: Sequence[dict], config: dict | None = None) -> ExperimentResult:
    reps = len(records)
    rej = sum(bool(r["reject"]) for r in records)
    rate = rej / reps
    taus = np.array([r["tau"] for r in records], dtype=float)
    secs = [r["_seconds"] for r in records if "_seconds" in r]
    return ExperimentResult(
        scenario=name,
        reps=reps,
        rejections=rej,
        rejection_rate=rate,
        mc_se=binomial_se(rate, reps),
        tau_mean=float(taus.mean()),
        tau_sd=float(taus.std()),
        records=[{k: v for k, v in r.items() if not k.startswith("_")} for r in records],
        seconds_per_rep=float(np.mean(secs)) if secs else float("nan"),
        config=config or {},
    )


def _config_dict(sc: Scenario) -> dict:
    c = sc.config
    return {"rho": c.rho, "tau": c.tau, "B": c.B, "side": c.side, "seed": sc.seed, "theta": sc.theta}


def run_size(scenario: Scenario, workers: int = 1) -> ExperimentResult:
    if scenario.theta != 0:
        raise ValueError(f"size runs need theta = 0, got {scenario.theta}")
    return summarize(scenario.name, _run_reps(scenario, workers), _config_dict(scenario))


def run_power(scenario: Scenario, thetas: Iterable[float], workers: int = 1) -> ExperimentResult:
    thetas = [float(t) for t in thetas]
    if 0.0 not in thetas:
        raise ValueError("theta grid must include 0")
    records, curve = [], []
    for th in thetas:
        sub = summarize(scenario.name, _run_reps(scenario.with_theta(th), workers))
        records.extend(sub.records)
        curve.append({"theta": th, "power": sub.rejection_rate, "se": sub.mc_se,
                      "tau_mean": sub.tau_mean})
    at0 = next(c for c in curve if c["theta"] == 0.0)
    res = summarize(scenario.name, [r for r in records if r["theta"] == 0.0],
                    _config_dict(scenario.with_theta(0.0)))
    res.records = records
    res.power_curve = curve
    assert res.rejection_rate == at0["power"]
    return res


def reproduce_table(name: str, budget: Budget, workers: int = 1) -> list[dict]:
    """One row per scenario cell of a size table."""
    if name not in TABLES:
        raise ValueError(f"unknown table {name!r}; choose from {sorted(TABLES)}")
    rows = []
    for sc_name in TABLES[name]:
        res = run_size(budget.apply(scenario_build(sc_name)), workers)
        rows.append({
            "scenario": sc_name,
            "size": res.rejection_rate,
            "se": res.mc_se,
            "reference": REFERENCE_SIZES[sc_name],
            "tau_mean": res.tau_mean,
        })
    return rows


def write_log(path: Union[str, Path], records: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def read_log(path: Union[str, Path]) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
