"""Route computation: wires topology + policy into the fixed-point kernel.

The kernel lives in ``_kernel``; when the package was built with Cython the
compiled extension shadows the pure-Python source and is picked up here
automatically.  Set ``ANYCASTTE_PURE_PYTHON=1`` to force the interpreted
kernel (used by the benchmark to compare both).
"""

from __future__ import annotations

import importlib.util
import os
from dataclasses import dataclass

from ..errors import ConvergenceError
from ..topology import AsGraph, CUSTOMER_OF, PROVIDER_OF, PEER
from .policy import PolicyConfig, build_announcements

from . import _kernel as _compiled_or_source

if os.environ.get("ANYCASTTE_PURE_PYTHON") and not _compiled_or_source.__file__.endswith(".py"):
    _spec = importlib.util.spec_from_file_location(
        "anycastte.routing._kernel_py",
        os.path.join(os.path.dirname(__file__), "_kernel.py"),
    )
    _kernel = importlib.util.module_from_spec(_spec)
    _spec.loader.exec_module(_kernel)
else:
    _kernel = _compiled_or_source

REL_NAMES = {
    _kernel.REL_ORIGIN: "origin",
    _kernel.REL_CUSTOMER: "customer",
    _kernel.REL_PEER: "peer",
    _kernel.REL_PROVIDER: "provider",
}

_REL_AT_IMPORTER = {
    # relationship of the link as seen from the *exporter* -> how the
    # importer classifies the route it learns over that link
    CUSTOMER_OF: _kernel.REL_CUSTOMER,   # exporter is importer's customer
    PROVIDER_OF: _kernel.REL_PROVIDER,
    PEER: _kernel.REL_PEER,
}


def kernel_backend() -> str:
    """'compiled' when the Cython extension is active, else 'python'."""
    return "python" if _kernel.__file__.endswith(".py") else "compiled"


@dataclass(frozen=True)
class Route:
    origin_site: str
    as_path: tuple[int, ...]
    learned_from: str  # origin | customer | peer | provider


@dataclass(frozen=True)
class RouteTable:
    """Best route per AS for one (graph, config); unreachable ASes absent."""

    best: dict[int, Route]

    def site_of(self, asn: int) -> str | None:
        route = self.best.get(asn)
        return route.origin_site if route else None


def compute_routes(graph: AsGraph, config: PolicyConfig) -> RouteTable:
    announcements = build_announcements(graph, config)

    idx = {node.asn: i for i, node in enumerate(graph.nodes)}
    n = len(graph.nodes)
    asns = [node.asn for node in graph.nodes]
    tier1 = [1 if node.tier1 else 0 for node in graph.nodes]
    maxlen = [node.edge_filter_maxlen for node in graph.nodes]

    edges = []
    for link in graph.links:
        a, b = idx[link.from_asn], idx[link.to_asn]
        # Two directed export edges per link, tagged with how the importer
        # sees the exporter.
        edges.append((a, b, _REL_AT_IMPORTER[link.relationship]))
        inverse = {CUSTOMER_OF: PROVIDER_OF, PROVIDER_OF: CUSTOMER_OF, PEER: PEER}
        edges.append((b, a, _REL_AT_IMPORTER[inverse[link.relationship]]))

    rel_of = {(a, b): rel for a, b, rel in edges}

    site_order = list(graph.site_ids())
    site_idx = {s: i for i, s in enumerate(site_order)}
    origin_lock = [-1] * n
    injections: list[list] = [[] for _ in range(n)]

    for ann in announcements:
        site = graph.site(ann.origin_site)
        host = idx[site.host_asn]
        origin_lock[host] = site_idx[ann.origin_site]
        pol = config.site_policy(ann.origin_site)
        for nb in site.neighbors:
            if pol.is_selective() and nb.asn not in pol.announce_to:
                continue
            if nb.neighbor_class == "route-server":
                # Transparent fan-out: members hear the origin path as if
                # peering directly; the route-server ASN stays out of the path
                # and installs nothing itself.
                rs = idx[nb.asn]
                for (exp, imp, _rel) in edges:
                    if exp == rs and imp != host:
                        injections[imp].append(
                            (site_idx[ann.origin_site], ann.as_path, _kernel.REL_PEER)
                        )
            else:
                target = idx[nb.asn]
                rel = rel_of[(host, target)]
                injections[target].append(
                    (site_idx[ann.origin_site], ann.as_path, rel)
                )

    best = _kernel.run_fixed_point(
        n, asns, tier1, maxlen, edges, injections, origin_lock,
        max_rounds=2 * n + 20,
    )
    if best is None:
        raise ConvergenceError(
            f"route computation did not converge for policy {config.policy_id!r}"
        )

    table = {}
    for i, entry in enumerate(best):
        if entry is None:
            continue
        site, path, rel = entry
        table[asns[i]] = Route(
            origin_site=site_order[site],
            as_path=tuple(path),
            learned_from=REL_NAMES[rel],
        )
    return RouteTable(best=table)
