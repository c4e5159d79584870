"""Playbooks: pre-measured policy menu with 10%-bin inverse index.

A playbook row pairs a deployable :class:`PolicyConfig` with the per-site
traffic split it produced, binned to 10% granularity.  The index answers
"which policies put site S in bin B" — the inverse-lookup table operators
scan when one site runs hot.
"""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import dataclass, field, replace

from .catchment import CatchmentMap, map_catchment
from .errors import AnycastError, PolicyError
from .routing import (
    PolicyConfig,
    SitePolicy,
    baseline_config,
    expand_negative_prepend,
)
from .topology import AsGraph

PLAYBOOK_FORMAT_VERSION = 1
BIN_LABELS = tuple(f"{lo}-{lo + 10}" for lo in range(0, 100, 10))
DEFAULT_STALE_AFTER_S = 30 * 24 * 3600  # warn when a playbook is a month old


def bin_of(fraction: float) -> str:
    """10% bin label for a fraction; bins are [lo, hi) with 1.0 -> "90-100"."""
    if not 0.0 <= fraction <= 1.0:
        raise AnycastError(f"fraction out of range: {fraction}")
    lo = min(int(fraction * 10), 9) * 10
    return f"{lo}-{lo + 10}"


@dataclass(frozen=True)
class PlaybookEntry:
    config: PolicyConfig
    fractions: dict[str, float]
    load_fractions: dict[str, float]
    bins: dict[str, str]
    measured_at: float

    @property
    def policy_id(self) -> str:
        return self.config.policy_id


@dataclass(frozen=True)
class Playbook:
    entries: tuple[PlaybookEntry, ...]
    baseline_id: str
    index: dict[tuple[str, str], frozenset[str]] = field(
        default_factory=dict, compare=False
    )

    def __post_init__(self):
        ids = [e.policy_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise AnycastError("duplicate policy_id in playbook")
        if self.baseline_id not in ids:
            raise AnycastError(f"baseline {self.baseline_id!r} missing from playbook")
        if not self.index:
            object.__setattr__(self, "index", _build_index(self.entries))

    def entry(self, policy_id: str) -> PlaybookEntry:
        for e in self.entries:
            if e.policy_id == policy_id:
                return e
        raise PolicyError(f"unknown policy {policy_id!r}")

    def policy_ids(self) -> list[str]:
        return [e.policy_id for e in self.entries]

    @property
    def baseline(self) -> PlaybookEntry:
        return self.entry(self.baseline_id)

    def site_ids(self) -> list[str]:
        return sorted(self.baseline.fractions)

    def policies_in_bin(self, site_id: str, bin_label: str) -> frozenset[str]:
        return self.index.get((site_id, bin_label), frozenset())

    def option_count(self, site_id: str) -> int:
        """Number of distinct occupied bins for one site (its notch count)."""
        return sum(
            1 for (s, _b), ids in self.index.items() if s == site_id and ids
        )

    def is_stale(self, now: float | None = None,
                 stale_after: float = DEFAULT_STALE_AFTER_S) -> bool:
        now = time.time() if now is None else now
        oldest = min(e.measured_at for e in self.entries)
        return now - oldest > stale_after


def _build_index(entries) -> dict[tuple[str, str], frozenset[str]]:
    acc: dict[tuple[str, str], set[str]] = {}
    for e in entries:
        for site, label in e.bins.items():
            acc.setdefault((site, label), set()).add(e.policy_id)
    return {k: frozenset(v) for k, v in acc.items()}


def make_entry(
    config: PolicyConfig,
    fractions: dict[str, float],
    load_fractions: dict[str, float] | None = None,
    measured_at: float | None = None,
) -> PlaybookEntry:
    """Entry from known fractions (fixture injection or a mapped catchment)."""
    load_fractions = load_fractions if load_fractions is not None else dict(fractions)
    return PlaybookEntry(
        config=config,
        fractions=dict(fractions),
        load_fractions=dict(load_fractions),
        bins={s: bin_of(f) for s, f in fractions.items()},
        measured_at=time.time() if measured_at is None else measured_at,
    )


def enumerate_policies(graph: AsGraph, menu: dict) -> list[PolicyConfig]:
    """Expand an enumeration menu into concrete configs.

    menu keys: max_prepend (int), include_negative (bool),
    selective_sets (site_id -> list of neighbor-ASN lists),
    poison_candidates (site_id -> list of ASNs).
    Sites whose capability flags rule out a mechanism contribute no variants
    for it.
    """
    max_prepend = int(menu.get("max_prepend", 0))
    include_negative = bool(menu.get("include_negative", False))
    selective_sets = menu.get("selective_sets", {})
    poison_candidates = menu.get("poison_candidates", {})

    site_ids = graph.site_ids()
    for site_id in itertools.chain(selective_sets, poison_candidates):
        if site_id not in site_ids:
            raise PolicyError(f"menu references unknown site {site_id!r}")

    base = baseline_config(graph)
    configs: list[PolicyConfig] = [base]

    def variant(policy_id: str, site_id: str, pol: SitePolicy) -> PolicyConfig:
        per_site = dict(base.per_site)
        per_site[site_id] = pol
        return PolicyConfig(policy_id=policy_id, per_site=per_site)

    for site_id in site_ids:
        for k in range(1, max_prepend + 1):
            configs.append(variant(f"prepend{k}x{site_id}", site_id, SitePolicy(prepend=k)))
    if include_negative:
        for site_id in site_ids:
            for k in range(1, max_prepend + 1):
                cfg = expand_negative_prepend(base, site_id, k)
                configs.append(replace(cfg, policy_id=f"neg{k}x{site_id}"))
    for site_id, subsets in selective_sets.items():
        site = graph.site(site_id)
        if not site.can_selective:
            continue
        declared = set(site.neighbor_asns())
        for subset in subsets:
            subset = frozenset(int(a) for a in subset)
            if not subset <= declared:
                raise PolicyError(
                    f"menu selective set {sorted(subset)} at {site_id} names "
                    f"non-neighbors"
                )
            label = "_".join(str(a) for a in sorted(subset))
            configs.append(
                variant(f"announce_{site_id}_{label}", site_id,
                        SitePolicy(announce_to=subset))
            )
    for site_id, asns in poison_candidates.items():
        site = graph.site(site_id)
        if not site.can_poison:
            continue
        for asn in asns:
            configs.append(
                variant(f"poison_{site_id}_{asn}", site_id,
                        SitePolicy(poison=frozenset((int(asn),))))
            )

    # Dedup on per-site content (a 1-site world makes negatives collapse into
    # the baseline); first occurrence wins so the baseline keeps its name.
    seen = set()
    out = []
    for cfg in configs:
        key = tuple(sorted((s, p) for s, p in cfg.per_site.items()))
        if key in seen:
            continue
        seen.add(key)
        out.append(cfg)
    return out


def build_playbook(
    graph: AsGraph,
    configs: list[PolicyConfig],
    baseline_id: str = "baseline",
    measured_at: float | None = None,
) -> tuple[Playbook, dict[str, CatchmentMap]]:
    """Map every config and assemble the playbook; also returns the raw
    catchment maps keyed by policy_id (the replay harness wants them)."""
    if not configs:
        raise PolicyError("no configs to build a playbook from")
    if baseline_id not in {c.policy_id for c in configs}:
        raise PolicyError(f"baseline {baseline_id!r} not among configs")
    measured_at = time.time() if measured_at is None else measured_at
    entries = []
    maps = {}
    for cfg in configs:
        cmap = map_catchment(graph, cfg)
        maps[cfg.policy_id] = cmap
        entries.append(
            make_entry(cfg, cmap.fractions, cmap.load_fractions, measured_at)
        )
    return Playbook(entries=tuple(entries), baseline_id=baseline_id), maps


def lookup_options(
    pb: Playbook, constraints: dict[str, tuple[float, float]]
) -> set[str]:
    """Policies whose fraction lies inside every per-site [lo, hi] interval."""
    known = set(pb.site_ids())
    for site in constraints:
        if site not in known:
            raise PolicyError(f"unknown site {site!r}")
    out = set()
    for e in pb.entries:
        if all(
            lo <= e.fractions[s] <= hi for s, (lo, hi) in constraints.items()
        ):
            out.add(e.policy_id)
    return out


def save_playbook(pb: Playbook, path) -> None:
    doc = {
        "format_version": PLAYBOOK_FORMAT_VERSION,
        "baseline_id": pb.baseline_id,
        "entries": [
            {
                "config": e.config.to_dict(),
                "fractions": e.fractions,
                "load_fractions": e.load_fractions,
                "bins": e.bins,
                "measured_at": e.measured_at,
            }
            for e in pb.entries
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_playbook(path) -> Playbook:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != PLAYBOOK_FORMAT_VERSION:
        raise AnycastError(
            f"unsupported playbook format version {doc.get('format_version')!r}"
        )
    entries = tuple(
        PlaybookEntry(
            config=PolicyConfig.from_dict(e["config"]),
            fractions={s: float(f) for s, f in e["fractions"].items()},
            load_fractions={s: float(f) for s, f in e["load_fractions"].items()},
            bins=dict(e["bins"]),
            measured_at=float(e["measured_at"]),
        )
        for e in doc["entries"]
    )
    return Playbook(entries=entries, baseline_id=doc["baseline_id"])
