"""Trial orchestration: a process pool over trial ids, merged in id order."""
from __future__ import annotations

import multiprocessing as mp
from typing import Any

from ..errors import ConfigError
from .config import ExperimentConfig
from .scenarios import SCENARIO_TABLE, Scenario, Table

# Shared read-only state inherited by forked workers.
_WORKER: dict[str, Any] = {}


def _run_trial(t: int):
    w = _WORKER
    return w["scenario"].trial(w["state"], w["cfg"], t)


def get_scenario(cfg: ExperimentConfig) -> Scenario:
    return SCENARIO_TABLE[cfg.scenario]


def prepare(cfg: ExperimentConfig) -> tuple[Scenario, Any]:
    """Validate keys and build the shared state (designs, SE curves)."""
    sc = get_scenario(cfg)
    cfg.check_keys(sc.keys)
    return sc, sc.prepare(cfg)


def run_trials(sc: Scenario, state, cfg: ExperimentConfig, workers: int = 1) -> list:
    if workers < 1:
        raise ConfigError("workers must be >= 1", "workers")
    ids = range(cfg.trials)
    if workers == 1 or cfg.trials == 1:
        return [sc.trial(state, cfg, t) for t in ids]
    _WORKER.update(scenario=sc, state=state, cfg=cfg)
    try:
        # fork shares the design operator copy-on-write; map keeps trial order
        with mp.get_context("fork").Pool(min(workers, cfg.trials)) as pool:
            return pool.map(_run_trial, ids, chunksize=1)
    finally:
        _WORKER.clear()


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Table:
    """Run every trial of ``cfg`` and render the CSV table (rows ordered by trial id)."""
    sc, state = prepare(cfg)
    results = run_trials(sc, state, cfg, workers) if sc.trial_based else []
    return sc.render(cfg, state, results)


def to_csv(table: Table) -> str:
    return "\n".join(table.lines()) + "\n"
