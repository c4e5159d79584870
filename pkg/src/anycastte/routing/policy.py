"""Per-site traffic-engineering actions and whole-deployment policies.

A :class:`SitePolicy` captures what one site announces (prepend depth,
which neighbors hear the route, poisoned ASes, or full withdrawal); a
:class:`PolicyConfig` is one playbook row covering every site.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..errors import PolicyError
from ..topology import AsGraph

MAX_PREPEND = 5

# Sentinel for "announce to every declared neighbor".
ALL_NEIGHBORS = "ALL"


@dataclass(frozen=True)
class SitePolicy:
    prepend: int = 0
    announce_to: str | frozenset[int] = ALL_NEIGHBORS
    poison: frozenset[int] = frozenset()
    withdrawn: bool = False

    def __post_init__(self):
        if not 0 <= self.prepend <= MAX_PREPEND:
            raise PolicyError(f"prepend must be in 0..{MAX_PREPEND}, got {self.prepend}")
        if self.announce_to != ALL_NEIGHBORS:
            object.__setattr__(self, "announce_to", frozenset(self.announce_to))
        object.__setattr__(self, "poison", frozenset(self.poison))

    def is_selective(self) -> bool:
        return self.announce_to != ALL_NEIGHBORS

    def to_dict(self) -> dict:
        return {
            "prepend": self.prepend,
            "announce_to": (
                ALL_NEIGHBORS if self.announce_to == ALL_NEIGHBORS
                else sorted(self.announce_to)
            ),
            "poison": sorted(self.poison),
            "withdrawn": self.withdrawn,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SitePolicy":
        announce = data.get("announce_to", ALL_NEIGHBORS)
        if announce != ALL_NEIGHBORS:
            announce = frozenset(int(a) for a in announce)
        return cls(
            prepend=int(data.get("prepend", 0)),
            announce_to=announce,
            poison=frozenset(int(a) for a in data.get("poison", ())),
            withdrawn=bool(data.get("withdrawn", False)),
        )


@dataclass(frozen=True)
class PolicyConfig:
    policy_id: str
    per_site: dict[str, SitePolicy] = field(default_factory=dict)

    def __post_init__(self):
        if not self.per_site:
            raise PolicyError(f"policy {self.policy_id!r} covers no sites")
        if all(p.withdrawn for p in self.per_site.values()):
            raise PolicyError(f"policy {self.policy_id!r} withdraws every site")

    def site_policy(self, site_id: str) -> SitePolicy:
        try:
            return self.per_site[site_id]
        except KeyError:
            raise PolicyError(f"policy {self.policy_id!r} has no site {site_id!r}") from None

    def active_sites(self) -> list[str]:
        return [s for s, p in self.per_site.items() if not p.withdrawn]

    def validate_for(self, graph: AsGraph) -> None:
        site_ids = set(graph.site_ids())
        if set(self.per_site) != site_ids:
            raise PolicyError(
                f"policy {self.policy_id!r} sites {sorted(self.per_site)} do not "
                f"match deployment sites {sorted(site_ids)}"
            )
        for site_id, pol in self.per_site.items():
            site = graph.site(site_id)
            declared = set(site.neighbor_asns())
            if pol.is_selective() and not pol.announce_to <= declared:
                extra = sorted(set(pol.announce_to) - declared)
                raise PolicyError(
                    f"policy {self.policy_id!r}: announce_to at {site_id} names "
                    f"non-neighbors {extra}"
                )
            if site.host_asn in pol.poison:
                raise PolicyError(
                    f"policy {self.policy_id!r}: {site_id} cannot poison its own AS"
                )

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "per_site": {s: p.to_dict() for s, p in sorted(self.per_site.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolicyConfig":
        return cls(
            policy_id=str(data["policy_id"]),
            per_site={
                s: SitePolicy.from_dict(p) for s, p in data["per_site"].items()
            },
        )


@dataclass(frozen=True)
class Announcement:
    """The AS path as emitted at one origin site."""

    origin_site: str
    as_path: tuple[int, ...]


def baseline_config(graph: AsGraph, policy_id: str = "baseline") -> PolicyConfig:
    return PolicyConfig(
        policy_id=policy_id,
        per_site={s: SitePolicy() for s in graph.site_ids()},
    )


def expand_negative_prepend(
    base: PolicyConfig, favored_site: str, k: int
) -> PolicyConfig:
    """Prepend ``k`` everywhere except ``favored_site``, which announces flat.

    Drawing traffic toward one site by de-preferring all the others.
    """
    if not 1 <= k <= MAX_PREPEND:
        raise PolicyError(f"negative-prepend depth must be in 1..{MAX_PREPEND}, got {k}")
    favored = base.site_policy(favored_site)
    if favored.withdrawn:
        raise PolicyError(f"favored site {favored_site!r} is withdrawn in {base.policy_id!r}")
    per_site = {}
    for site_id, pol in base.per_site.items():
        if site_id == favored_site:
            per_site[site_id] = replace(pol, prepend=0)
        elif pol.withdrawn:
            per_site[site_id] = pol
        else:
            per_site[site_id] = replace(pol, prepend=k)
    return PolicyConfig(policy_id=f"{base.policy_id}:neg{k}x{favored_site}", per_site=per_site)


def build_announcements(graph: AsGraph, config: PolicyConfig) -> list[Announcement]:
    """Materialize the origin AS paths for every non-withdrawn site.

    Prepend k emits k+1 copies of the host ASN.  Poisoning wraps the poisoned
    ASes between copies of the host ASN, and forces at least two prepends at
    every *other* site (otherwise the poisoned path would simply lose on
    length); that implied prepend is applied here, not by the caller.
    """
    config.validate_for(graph)
    anyone_poisons = any(
        p.poison and not p.withdrawn for p in config.per_site.values()
    )
    out = []
    for site_id in graph.site_ids():
        pol = config.site_policy(site_id)
        if pol.withdrawn:
            continue
        host = graph.site(site_id).host_asn
        prepend = pol.prepend
        if anyone_poisons and not pol.poison:
            prepend = max(prepend, 2)
        path = (host,) * (prepend + 1)
        if pol.poison:
            path = path + tuple(sorted(pol.poison)) + (host,)
        out.append(Announcement(origin_site=site_id, as_path=path))
    return out


def policy_distance(a: PolicyConfig, b: PolicyConfig) -> int:
    """Edit-style distance between two configs: how big a routing change is."""
    if set(a.per_site) != set(b.per_site):
        raise PolicyError(
            f"policies {a.policy_id!r} and {b.policy_id!r} cover different sites"
        )
    dist = 0
    for site_id, pa in a.per_site.items():
        pb = b.per_site[site_id]
        dist += abs(pa.prepend - pb.prepend)
        dist += 1 if pa.announce_to != pb.announce_to else 0
        dist += 1 if pa.poison != pb.poison else 0
        dist += 1 if pa.withdrawn != pb.withdrawn else 0
    return dist
