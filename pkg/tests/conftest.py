"""Shared fixtures.

The expensive fixtures (solved source archive, the full run grid) are
session-scoped and lazy: only the acceptance tests request them, so the
unit tests stay fast.
"""

from dataclasses import replace

import numpy as np
import pytest

from seeto.config import config_from_dict
from seeto.experiment import execute_run, family_from_config, solve_sources
from seeto.optimizer import (
    MODE_BASELINE,
    MODE_MODEL_ONLY,
    MODE_SEETO,
    MODE_SOLUTION_ONLY,
)


@pytest.fixture(scope="session")
def default_cfg():
    return config_from_dict({})


@pytest.fixture(scope="session")
def family(default_cfg):
    return family_from_config(default_cfg)


@pytest.fixture(scope="session")
def in_cluster_ids(family):
    return [t.task_id for t in family.targets if not family.is_outlier(t.task_id)]


@pytest.fixture(scope="session")
def outlier_ids(family):
    return [t.task_id for t in family.targets if family.is_outlier(t.task_id)]


@pytest.fixture(scope="session")
def source_archive(default_cfg, family):
    archive, _ = solve_sources(family, default_cfg)
    return archive


@pytest.fixture(scope="session")
def run_grid(default_cfg, family, source_archive, in_cluster_ids, outlier_ids):
    """Every trajectory the acceptance criteria share, keyed (task, arm, seed).

    Arms: the four run modes on the default configuration, plus a fixed
    high-rate arm (c forced to 0.038). The low-rate arm is not run
    separately; the plain transfer runs double for it because the
    confidence rule resolves to 0.017 on every family target (asserted
    where that reuse happens).
    """
    cfg = default_cfg
    cfg_high = replace(cfg, optimizer=replace(cfg.optimizer, c_override=0.038))
    all_ids = in_cluster_ids + outlier_ids
    jobs = []
    for task_id in all_ids:
        for seed in cfg.seeds:
            jobs.append((task_id, MODE_SEETO, seed, cfg, MODE_SEETO))
            jobs.append((task_id, MODE_BASELINE, seed, cfg, MODE_BASELINE))
            jobs.append((task_id, "c-high", seed, cfg_high, MODE_SEETO))
    for task_id in in_cluster_ids:
        for seed in cfg.seeds:
            jobs.append((task_id, MODE_SOLUTION_ONLY, seed, cfg, MODE_SOLUTION_ONLY))
            jobs.append((task_id, MODE_MODEL_ONLY, seed, cfg, MODE_MODEL_ONLY))
    grid = {}
    for task_id, arm, seed, job_cfg, mode in jobs:
        grid[(task_id, arm, seed)] = execute_run(
            family, source_archive, job_cfg, task_id, mode, seed
        )
    return grid


def median_hv_at(grid, task_id, arm, seeds, fe):
    return float(np.median([grid[(task_id, arm, s)].hv_at(fe) for s in seeds]))
