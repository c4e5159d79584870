"""Catchment mapping: which site each client block lands on, and map diffs.

This is the simulator's stand-in for active probing — the routing engine
already knows every AS's best route, so the block-to-site map falls out of
the attach AS.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .errors import AnycastError
from .routing import PolicyConfig, compute_routes
from .topology import AsGraph

UNREACHABLE = "UNREACHABLE"


@dataclass(frozen=True)
class CatchmentMap:
    config: str  # policy_id
    assignment: dict[str, str]  # block_id -> site_id or UNREACHABLE
    fractions: dict[str, float]  # share of reachable blocks
    load_fractions: dict[str, float]  # weight-weighted share
    unreachable_count: int = 0

    def reachable_blocks(self) -> int:
        return sum(1 for s in self.assignment.values() if s != UNREACHABLE)


@dataclass(frozen=True)
class CatchmentDiff:
    changed: frozenset[str]
    changed_fraction: float


def catchment_from_assignment(
    policy_id: str,
    assignment: dict[str, str],
    weights: dict[str, float] | None = None,
    site_ids: tuple[str, ...] = (),
) -> CatchmentMap:
    """Build a map (fractions included) from an explicit block assignment.

    Used both by :func:`map_catchment` and by fixture-injected playbooks.
    """
    weights = weights or {}
    sites = list(site_ids) or sorted(
        {s for s in assignment.values() if s != UNREACHABLE}
    )
    counts = {s: 0 for s in sites}
    loads = {s: 0.0 for s in sites}
    unreachable = 0
    for block, site in assignment.items():
        if site == UNREACHABLE:
            unreachable += 1
            continue
        counts[site] += 1
        loads[site] += weights.get(block, 1.0)
    total = sum(counts.values())
    total_load = sum(loads.values())
    fractions = {s: (counts[s] / total if total else 0.0) for s in sites}
    load_fractions = {
        s: (loads[s] / total_load if total_load else 0.0) for s in sites
    }
    return CatchmentMap(
        config=policy_id,
        assignment=dict(assignment),
        fractions=fractions,
        load_fractions=load_fractions,
        unreachable_count=unreachable,
    )


def map_catchment(graph: AsGraph, config: PolicyConfig) -> CatchmentMap:
    table = compute_routes(graph, config)
    assignment = {}
    for block in graph.clients:
        site = table.site_of(block.attach_asn)
        assignment[block.block_id] = site if site is not None else UNREACHABLE
    weights = {b.block_id: b.weight for b in graph.clients}
    return catchment_from_assignment(
        config.policy_id, assignment, weights, graph.site_ids()
    )


def diff_catchments(a: CatchmentMap, b: CatchmentMap) -> CatchmentDiff:
    if set(a.assignment) != set(b.assignment):
        raise AnycastError("catchment diff requires the same block universe")
    changed = frozenset(
        blk for blk, site in a.assignment.items() if b.assignment[blk] != site
    )
    total = len(a.assignment)
    return CatchmentDiff(
        changed=changed,
        changed_fraction=(len(changed) / total if total else 0.0),
    )


def write_catchment_csv(cmap: CatchmentMap, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block_id", "site_id"])
        for block in sorted(cmap.assignment):
            writer.writerow([block, cmap.assignment[block]])


def read_catchment_csv(path, policy_id: str = "loaded") -> CatchmentMap:
    assignment = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            assignment[row["block_id"]] = row["site_id"]
    return catchment_from_assignment(policy_id, assignment)


def write_catchment_summary(cmap: CatchmentMap, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            {
                "config": cmap.config,
                "fractions": cmap.fractions,
                "load_fractions": cmap.load_fractions,
                "unreachable_count": cmap.unreachable_count,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
