#!/usr/bin/env python3
"""Compare the compiled routing kernel against the pure-Python fallback.

Runs the full route computation (baseline policy) over generated topologies
of increasing size, once per backend.  The pure-Python measurement happens in
a subprocess with ANYCASTTE_PURE_PYTHON=1 because the backend is chosen at
import time.

Usage: python3 benchmarks/bench_routing.py [--repeat N]
"""

import argparse
import json
import os
import subprocess
import sys
import time

SIZES = [
    # (tier1, mid, stub, clients, sites)
    (2, 4, 10, 50, 3),
    (3, 8, 40, 200, 4),
    (3, 16, 120, 500, 4),
    (4, 24, 300, 1000, 5),
]


def measure(repeat):
    from anycastte.routing import baseline_config, compute_routes, kernel_backend
    from anycastte.topology import generate_topology

    rows = []
    for tier1, mid, stub, clients, sites in SIZES:
        graph = generate_topology(tier1, mid, stub, clients, sites, seed=1)
        config = baseline_config(graph)
        compute_routes(graph, config)  # warm-up
        best = min(
            _timed(compute_routes, graph, config) for _ in range(repeat)
        )
        rows.append({"ases": len(graph.nodes), "seconds": best})
    return {"backend": kernel_backend(), "rows": rows}


def _timed(fn, *args):
    start = time.perf_counter()
    fn(*args)
    return time.perf_counter() - start


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.worker:
        json.dump(measure(args.repeat), sys.stdout)
        return

    here = measure(args.repeat)
    env = {**os.environ, "ANYCASTTE_PURE_PYTHON": "1"}
    out = subprocess.run(
        [sys.executable, __file__, "--worker", "--repeat", str(args.repeat)],
        env=env, capture_output=True, text=True, check=True,
    )
    other = json.loads(out.stdout)
    by_backend = {here["backend"]: here, other["backend"]: other}
    if set(by_backend) != {"compiled", "python"}:
        print(f"note: only the {here['backend']} backend is available; "
              "showing a single column")
        _print_single(here)
        return

    print(f"{'ASes':>6}  {'python (ms)':>12}  {'compiled (ms)':>14}  {'speedup':>8}")
    for py, cy in zip(by_backend["python"]["rows"], by_backend["compiled"]["rows"]):
        speedup = py["seconds"] / cy["seconds"] if cy["seconds"] else float("inf")
        print(f"{py['ases']:>6}  {py['seconds'] * 1e3:>12.2f}  "
              f"{cy['seconds'] * 1e3:>14.2f}  {speedup:>7.1f}x")


def _print_single(result):
    print(f"{'ASes':>6}  {result['backend'] + ' (ms)':>14}")
    for row in result["rows"]:
        print(f"{row['ases']:>6}  {row['seconds'] * 1e3:>14.2f}")


if __name__ == "__main__":
    main()
