"""The simulated inter-domain world: ASes, relationships, sites, clients.

An :class:`AsGraph` is immutable after construction and is shared read-only by
the routing engine, the catchment mapper, and the replay harness.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from .errors import TopologyError, ValidationError

# Link relationship vocabulary.  Links are stored once per unordered pair;
# "customer-of" means ``from`` is a customer of ``to``.
CUSTOMER_OF = "customer-of"
PROVIDER_OF = "provider-of"
PEER = "peer"
RELATIONSHIPS = (CUSTOMER_OF, PROVIDER_OF, PEER)

NEIGHBOR_CLASSES = ("transit", "peer", "route-server")

DEFAULT_MAXLEN_CORE = 50
DEFAULT_MAXLEN_STUB = 10


@dataclass(frozen=True)
class AsNode:
    asn: int
    tier1: bool = False
    edge_filter_maxlen: int = DEFAULT_MAXLEN_CORE

    def __post_init__(self):
        if self.asn <= 0:
            raise ValidationError(f"asn must be positive, got {self.asn}")
        if self.edge_filter_maxlen < 1:
            raise ValidationError("edge_filter_maxlen must be >= 1")


@dataclass(frozen=True)
class AsLink:
    """One relationship edge, stored once per unordered pair."""

    from_asn: int
    to_asn: int
    relationship: str

    def __post_init__(self):
        if self.from_asn == self.to_asn:
            raise ValidationError(f"self-link at AS{self.from_asn}")
        if self.relationship not in RELATIONSHIPS:
            raise ValidationError(f"unknown relationship {self.relationship!r}")


@dataclass(frozen=True)
class SiteNeighbor:
    asn: int
    neighbor_class: str  # transit | peer | route-server

    def __post_init__(self):
        if self.neighbor_class not in NEIGHBOR_CLASSES:
            raise ValidationError(f"unknown neighbor class {self.neighbor_class!r}")


@dataclass(frozen=True)
class AnycastSite:
    site_id: str
    host_asn: int
    neighbors: tuple[SiteNeighbor, ...]
    capacity: float
    can_selective: bool = True
    can_poison: bool = True

    def neighbor_asns(self) -> tuple[int, ...]:
        return tuple(n.asn for n in self.neighbors)


@dataclass(frozen=True)
class ClientBlock:
    """Stands for a /24; homes at ``attach_asn`` with a relative load weight."""

    block_id: str
    attach_asn: int
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise ValidationError(f"block {self.block_id}: weight must be >= 0")


@dataclass(frozen=True)
class AsGraph:
    nodes: tuple[AsNode, ...]
    links: tuple[AsLink, ...]
    sites: tuple[AnycastSite, ...]
    clients: tuple[ClientBlock, ...]

    # Derived lookups, built once in __post_init__.
    _by_asn: dict = field(default_factory=dict, repr=False, compare=False)
    _site_by_id: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._by_asn.update({n.asn: n for n in self.nodes})
        self._site_by_id.update({s.site_id: s for s in self.sites})
        self._validate()

    def _validate(self):
        if len(self._by_asn) != len(self.nodes):
            raise ValidationError("duplicate asn in nodes")
        seen_pairs = {}
        for link in self.links:
            if link.from_asn not in self._by_asn:
                raise ValidationError(f"link references unknown AS{link.from_asn}")
            if link.to_asn not in self._by_asn:
                raise ValidationError(f"link references unknown AS{link.to_asn}")
            pair = frozenset((link.from_asn, link.to_asn))
            if pair in seen_pairs:
                raise ValidationError(
                    f"multiple relationships between AS{link.from_asn} and AS{link.to_asn}"
                )
            seen_pairs[pair] = link
        if len(self._site_by_id) != len(self.sites):
            raise ValidationError("duplicate site_id")
        for site in self.sites:
            if site.host_asn not in self._by_asn:
                raise ValidationError(f"site {site.site_id}: unknown host AS{site.host_asn}")
            if site.capacity <= 0:
                raise ValidationError(f"site {site.site_id}: capacity must be > 0")
            for nb in site.neighbors:
                if nb.asn not in self._by_asn:
                    raise ValidationError(
                        f"site {site.site_id}: dangling neighbor AS{nb.asn}"
                    )
                if frozenset((site.host_asn, nb.asn)) not in seen_pairs:
                    raise ValidationError(
                        f"site {site.site_id}: no link between host AS{site.host_asn} "
                        f"and neighbor AS{nb.asn}"
                    )
        seen_blocks = set()
        for block in self.clients:
            if block.block_id in seen_blocks:
                raise ValidationError(f"duplicate block_id {block.block_id}")
            seen_blocks.add(block.block_id)
            if block.attach_asn not in self._by_asn:
                raise ValidationError(
                    f"block {block.block_id}: unknown attach AS{block.attach_asn}"
                )

    def node(self, asn: int) -> AsNode:
        return self._by_asn[asn]

    def site(self, site_id: str) -> AnycastSite:
        try:
            return self._site_by_id[site_id]
        except KeyError:
            raise TopologyError(f"unknown site {site_id!r}") from None

    def site_ids(self) -> tuple[str, ...]:
        return tuple(s.site_id for s in self.sites)

    def tier1_asns(self) -> frozenset[int]:
        return frozenset(n.asn for n in self.nodes if n.tier1)

    def adjacency(self) -> dict[int, list[tuple[int, str]]]:
        """asn -> [(neighbor_asn, relationship as seen from asn)]."""
        adj: dict[int, list[tuple[int, str]]] = {n.asn: [] for n in self.nodes}
        for link in self.links:
            a, b, rel = link.from_asn, link.to_asn, link.relationship
            if rel == PEER:
                adj[a].append((b, PEER))
                adj[b].append((a, PEER))
            elif rel == CUSTOMER_OF:
                adj[a].append((b, CUSTOMER_OF))   # a is customer of b
                adj[b].append((a, PROVIDER_OF))   # b is provider of a
            else:  # a is provider of b
                adj[a].append((b, PROVIDER_OF))
                adj[b].append((a, CUSTOMER_OF))
        return adj

    def to_dict(self) -> dict:
        return {
            "nodes": [
                {"asn": n.asn, "tier1": n.tier1, "edge_filter_maxlen": n.edge_filter_maxlen}
                for n in self.nodes
            ],
            "links": [
                {"from": l.from_asn, "to": l.to_asn, "relationship": l.relationship}
                for l in self.links
            ],
            "sites": [
                {
                    "site_id": s.site_id,
                    "host_asn": s.host_asn,
                    "neighbors": [
                        {"asn": nb.asn, "class": nb.neighbor_class} for nb in s.neighbors
                    ],
                    "capacity": s.capacity,
                    "can_selective": s.can_selective,
                    "can_poison": s.can_poison,
                }
                for s in self.sites
            ],
            "clients": [
                {"block_id": b.block_id, "attach_asn": b.attach_asn, "weight": b.weight}
                for b in self.clients
            ],
        }


def graph_from_dict(data: dict) -> AsGraph:
    try:
        nodes = tuple(
            AsNode(
                asn=int(n["asn"]),
                tier1=bool(n.get("tier1", False)),
                edge_filter_maxlen=int(n.get("edge_filter_maxlen", DEFAULT_MAXLEN_CORE)),
            )
            for n in data["nodes"]
        )
        links = tuple(
            AsLink(int(l["from"]), int(l["to"]), str(l["relationship"]))
            for l in data["links"]
        )
        sites = tuple(
            AnycastSite(
                site_id=str(s["site_id"]),
                host_asn=int(s["host_asn"]),
                neighbors=tuple(
                    SiteNeighbor(int(nb["asn"]), str(nb["class"]))
                    for nb in s.get("neighbors", [])
                ),
                capacity=float(s.get("capacity", 1000.0)),
                can_selective=bool(s.get("can_selective", True)),
                can_poison=bool(s.get("can_poison", True)),
            )
            for s in data["sites"]
        )
        clients = tuple(
            ClientBlock(
                block_id=str(b["block_id"]),
                attach_asn=int(b["attach_asn"]),
                weight=float(b.get("weight", 1.0)),
            )
            for b in data["clients"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TopologyError(f"malformed topology document: {exc}") from exc
    return AsGraph(nodes=nodes, links=links, sites=sites, clients=clients)


def load_topology(path) -> AsGraph:
    """Load and validate a topology file (JSON document, see README)."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise TopologyError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise TopologyError(f"parse error in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise TopologyError(f"parse error in {path}: expected an object at top level")
    return graph_from_dict(data)


def save_topology(graph: AsGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def generate_topology(
    n_tier1: int,
    n_mid: int,
    n_stub: int,
    n_clients: int,
    n_sites: int,
    seed: int,
) -> AsGraph:
    """Deterministic random world: Tier-1 peering clique, mid-tier transit
    hierarchy, stub edge, client blocks attached at the edge.

    Sites are hosted at stub/mid ASes; hosting ASes never carry client blocks
    of their own so catchment shifts stay visible.
    """
    for name, value in (
        ("n_tier1", n_tier1), ("n_mid", n_mid), ("n_stub", n_stub),
        ("n_clients", n_clients), ("n_sites", n_sites),
    ):
        if value < 1:
            raise TopologyError(f"{name} must be >= 1, got {value}")
    if n_sites > n_stub + n_mid:
        raise TopologyError(
            f"unsatisfiable spec: n_sites={n_sites} exceeds stub+mid ASes "
            f"({n_stub + n_mid})"
        )

    rng = random.Random(seed)
    tier1_asns = list(range(10, 10 + n_tier1))
    mid_asns = list(range(100, 100 + n_mid))
    stub_asns = list(range(1000, 1000 + n_stub))

    nodes = [AsNode(a, tier1=True, edge_filter_maxlen=DEFAULT_MAXLEN_CORE) for a in tier1_asns]
    nodes += [AsNode(a, edge_filter_maxlen=DEFAULT_MAXLEN_CORE) for a in mid_asns]
    nodes += [AsNode(a, edge_filter_maxlen=DEFAULT_MAXLEN_STUB) for a in stub_asns]

    links: list[AsLink] = []
    for i, a in enumerate(tier1_asns):
        for b in tier1_asns[i + 1:]:
            links.append(AsLink(a, b, PEER))

    # Mid tier: providers drawn from Tier-1s and already-placed mids, which
    # keeps the customer-provider hierarchy acyclic.
    for idx, a in enumerate(mid_asns):
        candidates = tier1_asns + mid_asns[:idx]
        n_prov = min(len(candidates), rng.choice((1, 2)))
        for provider in rng.sample(candidates, n_prov):
            links.append(AsLink(a, provider, CUSTOMER_OF))
    # A few lateral mid-mid peerings.
    for idx, a in enumerate(mid_asns):
        for b in mid_asns[idx + 1:]:
            if rng.random() < 0.25 and not _linked(links, a, b):
                links.append(AsLink(a, b, PEER))

    for a in stub_asns:
        n_prov = min(n_mid, rng.choice((1, 1, 2)))
        for provider in rng.sample(mid_asns, n_prov):
            links.append(AsLink(a, provider, CUSTOMER_OF))

    host_candidates = stub_asns + mid_asns
    host_asns = rng.sample(host_candidates, n_sites)
    adjacency: dict[int, list[tuple[int, str]]] = {}
    for link in links:
        a, b, rel = link.from_asn, link.to_asn, link.relationship
        adjacency.setdefault(a, []).append((b, rel))
        inverse = {PEER: PEER, CUSTOMER_OF: PROVIDER_OF, PROVIDER_OF: CUSTOMER_OF}[rel]
        adjacency.setdefault(b, []).append((a, inverse))

    sites = []
    for i, host in enumerate(host_asns):
        neighbors = tuple(
            SiteNeighbor(nb, "transit" if rel == CUSTOMER_OF else "peer")
            for nb, rel in sorted(adjacency.get(host, []))
        )
        sites.append(
            AnycastSite(
                site_id=f"S{i:02d}",
                host_asn=host,
                neighbors=neighbors,
                capacity=1000.0,
            )
        )

    attach_candidates = (
        [a for a in stub_asns if a not in host_asns]
        or [a for a in stub_asns + mid_asns if a not in host_asns]
        or stub_asns
    )
    clients = tuple(
        ClientBlock(
            block_id=f"blk{i:04d}",
            attach_asn=rng.choice(attach_candidates),
            weight=round(rng.uniform(0.5, 2.0), 3),
        )
        for i in range(n_clients)
    )

    return AsGraph(
        nodes=tuple(nodes), links=tuple(links), sites=tuple(sites), clients=clients
    )


def _linked(links: list[AsLink], a: int, b: int) -> bool:
    pair = {a, b}
    return any({l.from_asn, l.to_asn} == pair for l in links)
