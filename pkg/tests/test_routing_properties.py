"""Routing invariants over generated worlds plus oracle equivalence on all
small graphs.  The per-seed parametrization localizes any failure."""

import pytest

from anycastte.routing import compute_routes

from oracles import check_stable, oracle_routes
from properties import (
    ALL_CHECKS,
    property_world,
    small_world,
    small_world_configs,
)

N_PROPERTY_SEEDS = 50
N_SMALL_SEEDS = 60


@pytest.mark.parametrize("seed", range(N_PROPERTY_SEEDS))
def test_invariants(seed):
    graph = property_world(seed)
    violations = [v for check in ALL_CHECKS for v in check(graph)]
    assert violations == []


@pytest.mark.parametrize("seed", range(N_SMALL_SEEDS))
def test_small_world_oracle_equivalence(seed):
    graph = small_world(seed)
    for cfg in small_world_configs(graph):
        engine = compute_routes(graph, cfg)
        oracle = oracle_routes(graph, cfg)
        assert engine.best == oracle.best, f"policy {cfg.policy_id}"
        assert check_stable(graph, cfg, engine) == [], f"policy {cfg.policy_id}"
