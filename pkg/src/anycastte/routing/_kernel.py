"""Hot kernel: synchronous path-vector fixed point over an AS graph.

This module is deliberately dependency-free plain Python so the build can
cythonize it as-is; the compiled extension shadows this file when present
(see engine.kernel_backend).  Semantics:

* local preference by learning relationship: customer > peer > provider,
* then shortest received AS path, then lowest next-hop ASN,
* export: customer-learned (or originated) routes go to everyone,
  peer/provider-learned routes go only to customers,
* receiver-side filters: loop (own ASN in path), path-length cap,
  and the Tier-1 leak filter (a Tier-1 drops customer-learned paths that
  contain a different Tier-1).

Nodes are dense indices 0..n-1; paths are tuples of ASNs as received (the
receiver's own ASN is never part of its stored path).
"""

REL_ORIGIN = -1
REL_CUSTOMER = 0
REL_PEER = 1
REL_PROVIDER = 2


def accepts(node_asn, tier1_flag, maxlen, tier1_asns, path, learned_rel):
    """Receiver-side import filters for one candidate path."""
    if len(path) > maxlen:
        return False
    if node_asn in path:
        return False
    if tier1_flag and learned_rel == REL_CUSTOMER:
        for hop in path:
            if hop != node_asn and hop in tier1_asns:
                return False
    return True


def run_fixed_point(
    n,
    asns,
    tier1,
    maxlen,
    edges,
    injections,
    origin_lock,
    max_rounds,
):
    """Iterate synchronous route selection to convergence.

    n            -- node count
    asns         -- list: node index -> ASN
    tier1        -- list of 0/1 flags per node
    maxlen       -- per-node accepted path length cap
    edges        -- list of (exporter, importer, rel_at_importer) directed
                    pairs; rel_at_importer is how the importer classifies the
                    exporter (REL_CUSTOMER if the exporter is its customer...)
    injections   -- list: node index -> list of (site, path, rel) candidates
                    delivered directly from the origins (first hop, including
                    selective-announcement and route-server fan-out effects)
    origin_lock  -- list: node index -> site index if the node originates the
                    prefix itself (its best route is pinned), else -1
    max_rounds   -- iteration cap; returns None on non-convergence

    Returns list: node index -> (site, path, rel) or None.
    """
    tier1_set = set()
    for i in range(n):
        if tier1[i]:
            tier1_set.add(asns[i])

    best = [None] * n
    for i in range(n):
        if origin_lock[i] >= 0:
            best[i] = (origin_lock[i], (), REL_ORIGIN)

    # Pre-filter injected candidates once; they never change across rounds.
    inj = []
    for i in range(n):
        ok = []
        for (site, path, rel) in injections[i]:
            if accepts(asns[i], tier1[i], maxlen[i], tier1_set, path, rel):
                ok.append((site, path, rel))
        inj.append(ok)

    in_edges = [[] for _ in range(n)]
    for (j, i, rel) in edges:
        in_edges[i].append((j, rel))

    for _round in range(max_rounds):
        changed = False
        new_best = [None] * n
        for i in range(n):
            if origin_lock[i] >= 0:
                new_best[i] = best[i]
        for i in range(n):
            if origin_lock[i] >= 0:
                continue
            cand = list(inj[i])
            for (j, rel) in in_edges[i]:
                bj = best[j]
                if bj is None:
                    continue
                site_j, path_j, rel_j = bj
                # Origins never re-export here: their emission is entirely
                # captured by the injections.
                if rel_j == REL_ORIGIN:
                    continue
                # Valley-free export: peer/provider-learned routes only flow
                # to the exporter's customers (rel == REL_PROVIDER means the
                # importer sees the exporter as its provider).
                if rel_j != REL_CUSTOMER and rel != REL_PROVIDER:
                    continue
                path = (asns[j],) + path_j
                if accepts(asns[i], tier1[i], maxlen[i], tier1_set, path, rel):
                    cand.append((site_j, path, rel))
            if cand:
                chosen = min(cand, key=lambda c: (c[2], len(c[1]), c[1][0]))
            else:
                chosen = None
            new_best[i] = chosen
            if chosen != best[i]:
                changed = True
        best = new_best
        if not changed:
            return best
    return None
