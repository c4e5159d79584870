import json
from pathlib import Path

import pytest

from anycastte.playbook import Playbook, make_entry
from anycastte.routing import ALL_NEIGHBORS, PolicyConfig, SitePolicy
from anycastte.topology import graph_from_dict, load_topology

FIXTURES = Path(__file__).parent / "fixtures"

SITES3 = ("AMS", "BOS", "CNF")

# The 21-row published-style playbook fixture (policies a-u): per-site traffic
# percentages and the TE action behind each row.  Fractions are injected, not
# simulated; row (a) uses approximate midpoints.
TABLE5_FRACTIONS = {
    "a": (5, 35, 55),
    "b": (15, 35, 55),
    "c": (15, 35, 45),
    "d": (15, 35, 45),
    "e": (25, 35, 45),
    "f": (35, 25, 35),
    "g": (25, 65, 5),
    "h": (35, 65, 5),
    "i": (45, 45, 15),
    "j": (25, 15, 65),
    "k": (35, 5, 55),
    "l": (45, 5, 45),
    "m": (45, 25, 35),
    "n": (55, 15, 25),
    "o": (35, 25, 35),
    "p": (55, 25, 25),
    "q": (65, 15, 15),
    "r": (65, 5, 25),
    "s": (75, 5, 25),
    "t": (75, 15, 5),
    "u": (85, 5, 5),
}

# Synthetic neighbor ASNs used for the selective/poison rows.
AMS_PEER_SETS = {"sixpeers": frozenset({61, 62}), "rs": frozenset({63}),
                 "ixp": frozenset({61, 62, 63})}
TRANSIT_1, TRANSIT_2 = 71, 72


def _cfg(policy_id: str, **overrides: SitePolicy) -> PolicyConfig:
    per_site = {s: SitePolicy() for s in SITES3}
    per_site.update(overrides)
    return PolicyConfig(policy_id=policy_id, per_site=per_site)


def _neg(policy_id: str, favored: str, k: int) -> PolicyConfig:
    per_site = {
        s: (SitePolicy() if s == favored else SitePolicy(prepend=k)) for s in SITES3
    }
    return PolicyConfig(policy_id=policy_id, per_site=per_site)


TABLE5_CONFIGS = {
    "a": _cfg("a", AMS=SitePolicy(announce_to=AMS_PEER_SETS["sixpeers"])),
    "b": _cfg("b", AMS=SitePolicy(announce_to=AMS_PEER_SETS["rs"])),
    "c": _cfg("c", AMS=SitePolicy(announce_to=AMS_PEER_SETS["ixp"],
                                  poison=frozenset({TRANSIT_1, TRANSIT_2}))),
    "d": _cfg("d", AMS=SitePolicy(prepend=3)),
    "e": _cfg("e", AMS=SitePolicy(prepend=2)),
    "f": _cfg("f", AMS=SitePolicy(prepend=1)),
    "g": _neg("g", "BOS", 3),
    "h": _neg("h", "BOS", 2),
    "i": _neg("i", "BOS", 1),
    "j": _neg("j", "CNF", 3),
    "k": _neg("k", "CNF", 2),
    "l": _neg("l", "CNF", 1),
    "m": _cfg("m", AMS=SitePolicy(announce_to=frozenset({TRANSIT_1}))),
    "n": _cfg("n", AMS=SitePolicy(announce_to=frozenset({TRANSIT_2}))),
    "o": _cfg("o", AMS=SitePolicy(poison=frozenset({TRANSIT_2}))),
    "p": _cfg("p", AMS=SitePolicy(poison=frozenset({TRANSIT_1}))),
    "q": _cfg("q"),
    "r": _cfg("r", BOS=SitePolicy(prepend=1)),
    "s": _cfg("s", BOS=SitePolicy(prepend=3)),
    "t": _cfg("t", CNF=SitePolicy(prepend=1)),
    "u": _neg("u", "AMS", 1),
}

MEASURED_AT = 1_700_000_000.0


def make_table5_playbook() -> Playbook:
    entries = []
    for pid, (ams, bos, cnf) in TABLE5_FRACTIONS.items():
        fractions = {"AMS": ams / 100, "BOS": bos / 100, "CNF": cnf / 100}
        entries.append(
            make_entry(TABLE5_CONFIGS[pid], fractions, measured_at=MEASURED_AT)
        )
    return Playbook(entries=tuple(entries), baseline_id="q")


@pytest.fixture(scope="session")
def table5_playbook() -> Playbook:
    return make_table5_playbook()


@pytest.fixture(scope="session")
def peering3():
    return load_topology(FIXTURES / "peering3.json")


def make_diamond():
    """6-AS, 2-site world: each site behind its own transit, transits peered
    through a shared provider pair."""
    doc = {
        "nodes": [
            {"asn": 1, "tier1": True},
            {"asn": 2, "tier1": True},
            {"asn": 30}, {"asn": 40},
            {"asn": 100, "edge_filter_maxlen": 10},
            {"asn": 200, "edge_filter_maxlen": 10},
        ],
        "links": [
            {"from": 1, "to": 2, "relationship": "peer"},
            {"from": 30, "to": 1, "relationship": "customer-of"},
            {"from": 40, "to": 2, "relationship": "customer-of"},
            {"from": 30, "to": 40, "relationship": "peer"},
            {"from": 100, "to": 30, "relationship": "customer-of"},
            {"from": 200, "to": 40, "relationship": "customer-of"},
        ],
        "sites": [
            {"site_id": "AMS", "host_asn": 100, "capacity": 100.0,
             "neighbors": [{"asn": 30, "class": "transit"}]},
            {"site_id": "BOS", "host_asn": 200, "capacity": 100.0,
             "neighbors": [{"asn": 40, "class": "transit"}]},
        ],
        "clients": [
            {"block_id": "c30", "attach_asn": 30, "weight": 1.0},
            {"block_id": "c40", "attach_asn": 40, "weight": 1.0},
            {"block_id": "c1", "attach_asn": 1, "weight": 2.0},
            {"block_id": "c2", "attach_asn": 2, "weight": 1.0},
        ],
    }
    return graph_from_dict(doc)


@pytest.fixture
def diamond():
    return make_diamond()


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
