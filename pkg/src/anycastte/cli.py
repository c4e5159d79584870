"""Command-line surface: topo / playbook / estimate / replay / diff / serve."""

from __future__ import annotations

import json
import sys

import click

from .catchment import diff_catchments, read_catchment_csv
from .errors import AnycastError
from .estimator import (
    EstimatorSample,
    estimate_from_trace,
    estimate_offered,
    load_ingest_csv,
)
from .playbook import (
    build_playbook,
    enumerate_policies,
    load_playbook,
    lookup_options,
    save_playbook,
)
from .replay import load_trace_csv, run_scenario
from .service import AppConfig, make_run_record, save_run, serve as serve_app, _maps_for
from .topology import generate_topology, load_topology, save_topology


@click.group()
def main():
    """Anycast traffic-engineering sandbox."""


def _emit(data: dict, as_json: bool, text: str):
    click.echo(json.dumps(data, indent=2, sort_keys=True) if as_json else text)


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


# -- topo -------------------------------------------------------------------

@main.group()
def topo():
    """Topology files."""


@topo.command("validate")
@click.argument("path", type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def topo_validate(path, as_json):
    try:
        graph = load_topology(path)
    except AnycastError as exc:
        _fail(exc)
    summary = {
        "nodes": len(graph.nodes),
        "links": len(graph.links),
        "sites": list(graph.site_ids()),
        "clients": len(graph.clients),
    }
    _emit(summary, as_json,
          f"ok: {summary['nodes']} ASes, {summary['links']} links, "
          f"{len(summary['sites'])} sites, {summary['clients']} client blocks")


@topo.command("generate")
@click.option("--tier1", default=2, show_default=True)
@click.option("--mid", default=4, show_default=True)
@click.option("--stub", default=8, show_default=True)
@click.option("--clients", default=50, show_default=True)
@click.option("--sites", default=3, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path())
def topo_generate(tier1, mid, stub, clients, sites, seed, out):
    try:
        graph = generate_topology(tier1, mid, stub, clients, sites, seed)
    except AnycastError as exc:
        _fail(exc)
    save_topology(graph, out)
    click.echo(f"wrote {out}")


# -- playbook ---------------------------------------------------------------

@main.group()
def playbook():
    """Build and query playbooks."""


@playbook.command("build")
@click.option("--topo", "topo_path", required=True, type=click.Path(exists=True))
@click.option("--menu", "menu_path", type=click.Path(exists=True),
              help="JSON enumeration menu; default: prepends 1-3 plus negatives")
@click.option("--out", required=True, type=click.Path())
def playbook_build(topo_path, menu_path, out):
    try:
        graph = load_topology(topo_path)
        if menu_path:
            with open(menu_path) as fh:
                menu = json.load(fh)
        else:
            menu = {"max_prepend": 3, "include_negative": True}
        configs = enumerate_policies(graph, menu)
        pb, _maps = build_playbook(graph, configs)
    except AnycastError as exc:
        _fail(exc)
    save_playbook(pb, out)
    click.echo(f"wrote {out} ({len(pb.entries)} policies)")


@playbook.command("lookup")
@click.option("--playbook", "pb_path", required=True, type=click.Path(exists=True))
@click.option("--site", required=True)
@click.option("--bin", "bin_label", help='10% bin label, e.g. "60-70"')
@click.option("--max", "max_fraction", type=float, help="upper bound on the site fraction")
@click.option("--min", "min_fraction", type=float, default=0.0)
@click.option("--json", "as_json", is_flag=True)
def playbook_lookup(pb_path, site, bin_label, max_fraction, min_fraction, as_json):
    try:
        pb = load_playbook(pb_path)
        if bin_label:
            ids = sorted(pb.policies_in_bin(site, bin_label))
        elif max_fraction is not None:
            ids = sorted(lookup_options(pb, {site: (min_fraction, max_fraction)}))
        else:
            raise AnycastError("pass --bin or --max")
    except AnycastError as exc:
        _fail(exc)
    _emit({"site": site, "policies": ids}, as_json, ", ".join(ids) if ids else "(none)")


# -- estimate ---------------------------------------------------------------

@main.command("estimate")
@click.option("--trace", "trace_path", type=click.Path(exists=True),
              help="ingest CSV: t,site_id,src_id,rate,is_known_good")
@click.option("--calibration-end", type=float, default=300.0, show_default=True,
              help="rows before this time are attack-free calibration")
@click.option("--known-offered", type=float)
@click.option("--known-observed", type=float)
@click.option("--observed", type=float)
@click.option("--site", default="site")
@click.option("--json", "as_json", is_flag=True)
def estimate_cmd(trace_path, calibration_end, known_offered, known_observed,
                 observed, site, as_json):
    """Offered-load estimates, from an ingest trace or a single window."""
    try:
        if trace_path:
            rows = load_ingest_csv(trace_path)
            results = estimate_from_trace(rows, calibration_end)
        elif None not in (known_offered, known_observed, observed):
            results = [estimate_offered(EstimatorSample(
                site_id=site, window=(0.0, 60.0),
                t_observed=observed,
                t_known_observed=known_observed,
                t_known_offered=known_offered,
            ))]
        else:
            raise AnycastError(
                "pass --trace or all of --known-offered/--known-observed/--observed"
            )
    except AnycastError as exc:
        _fail(exc)
    data = [
        {
            "site_id": r.site_id,
            "alpha": r.alpha,
            "estimated_offered": r.t_offered_hat,
            "confidence": r.confidence.value,
        }
        for r in results
    ]
    _emit({"estimates": data}, as_json, "\n".join(
        f"{d['site_id']}: alpha={d['alpha']:.4f} "
        f"estimated_offered={d['estimated_offered']:.1f} ({d['confidence']})"
        for d in data
    ))


# -- replay -----------------------------------------------------------------

@main.command("replay")
@click.option("--topo", "topo_path", required=True, type=click.Path(exists=True))
@click.option("--playbook", "pb_path", required=True, type=click.Path(exists=True))
@click.option("--trace", "trace_path", required=True, type=click.Path(exists=True))
@click.option("--capacity", "capacity_args", multiple=True,
              help="site=rate, repeatable")
@click.option("--controller/--no-controller", default=True, show_default=True)
@click.option("--propagation-delay", default=300.0, show_default=True)
@click.option("--data-dir", type=click.Path(), help="persist a run record here")
@click.option("--json", "as_json", is_flag=True)
def replay_cmd(topo_path, pb_path, trace_path, capacity_args, controller,
               propagation_delay, data_dir, as_json):
    try:
        graph = load_topology(topo_path)
        pb = load_playbook(pb_path)
        maps = _maps_for(pb, graph)
        trace = load_trace_csv(trace_path)
        capacities = {s.site_id: s.capacity for s in graph.sites}
        for arg in capacity_args:
            site, _, rate = arg.partition("=")
            capacities[site] = float(rate)
        report = run_scenario(
            pb, maps, trace, capacities,
            controller_enabled=controller,
            propagation_delay=propagation_delay,
        )
    except (AnycastError, ValueError) as exc:
        _fail(exc)
    doc = report.to_dict()
    if data_dir:
        record = make_run_record(doc, {
            "topology": topo_path, "playbook": pb_path, "trace": trace_path,
        })
        path = save_run(record, data_dir)
        click.echo(f"run record: {path}", err=True)
    _emit(doc, as_json,
          f"outcome={report.outcome} actions="
          f"{[(a['time'], a['policy_id']) for a in report.actions]}")


# -- diff -------------------------------------------------------------------

@main.command("diff")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True)
def diff_cmd(path_a, path_b, as_json):
    """Compare two catchment CSV exports."""
    try:
        diff = diff_catchments(read_catchment_csv(path_a), read_catchment_csv(path_b))
    except AnycastError as exc:
        _fail(exc)
    _emit(
        {"changed": sorted(diff.changed), "changed_fraction": diff.changed_fraction},
        as_json,
        f"changed_fraction={diff.changed_fraction:.4f} ({len(diff.changed)} blocks)",
    )


# -- serve ------------------------------------------------------------------

@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--playbook", "pb_path", type=click.Path(exists=True))
@click.option("--topo", "topo_path", type=click.Path(exists=True))
@click.option("--bind", default=None, help="host:port")
def serve_cmd(config_path, pb_path, topo_path, bind):
    try:
        cfg = AppConfig.from_file(config_path) if config_path else AppConfig.from_env()
        if pb_path:
            cfg.playbook_path = pb_path
        if topo_path:
            cfg.topology_path = topo_path
        if bind:
            host, _, port = bind.partition(":")
            cfg.bind_host = host or cfg.bind_host
            if port:
                cfg.bind_port = int(port)
        serve_app(cfg)
    except AnycastError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
