"""``lapcompress`` command line: one subcommand per case-study stage."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compress import dominant_basis_table, energy_curve
from .consensus_sim import ConsensusConfig, simulate_consensus
from .ensemble_stats import theorem1_sigma, variance_decay_profile, whitening_basis
from .graph import (
    build_laplacian,
    consensus_matrix,
    format_coords,
    format_edge_list,
    radius_for_mean_degree,
    random_geometric_graph,
    read_edge_list,
)
from .ingest import (
    bundled_graph,
    data_path,
    read_snapshots,
    simulation_csv,
    snapshot_csv,
    synthesize_field_data,
)
from .report import CompressReport, dominant_tables_csv, eigenvector_overlay, figure5_data, write_atomic
from .spectral import eigenbasis, eigenvalue_csv, matrix_csv
from .voter_sim import VoterConfig, simulate_voter


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("UsageError", f"{self.prog}: {message}", code=2)


def _fail(kind: str, message: str, code: int = 1):
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    sys.exit(code)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pins(text: str) -> list[tuple[int, int]]:
    out = []
    for item in str(text).split(","):
        if not item.strip():
            continue
        node, _, status = item.partition(":")
        try:
            out.append((int(node), int(status)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"pins look like 'node:status,...', got {text!r}") from None
    return out


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("LAPCOMPRESS_THREADS")
    return int(env) if env else None


def read_config(path) -> dict:
    """``key = value`` lines; keys are flag names with or without dashes."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            out[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return out


# --- output bookkeeping -----------------------------------------------------


class Outputs:
    def __init__(self, out_dir, command: str, args: argparse.Namespace):
        self.root = Path(out_dir)
        self.command = command
        self.args = args
        self.files: list[str] = []

    def write(self, name: str, text: str):
        write_atomic(self.root / name, text)
        self.files.append(name)

    def finish(self):
        skip = {"out_dir", "func", "config", "threads"}
        provenance = {
            k: v for k, v in sorted(vars(self.args).items()) if k not in skip and not callable(v)
        }
        manifest = {
            "schema_version": 1,
            "tool_version": __version__,
            "command": self.command,
            "provenance": provenance,
            "files": [
                {"path": f, "sha256": hashlib.sha256((self.root / f).read_bytes()).hexdigest()}
                for f in self.files
            ],
        }
        write_atomic(self.root / "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n")


def _load_graph(args):
    if args.graph:
        return read_edge_list(args.graph, getattr(args, "labels", None), getattr(args, "coords", None))
    return bundled_graph()


# --- subcommands ------------------------------------------------------------


def cmd_gen_graph(args):
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    radius = args.radius if args.radius is not None else radius_for_mean_degree(args.n, args.mean_degree)
    g = random_geometric_graph(args.n, radius, args.row_sum, args.seed, weighting=args.weighting)
    out = Outputs(args.out_dir, "gen-graph", args)
    out.write("graph.edges", format_edge_list(g))
    out.write("graph.coords", format_coords(g.coords))
    out.write("graph.json", json.dumps(
        {"n": g.n, "radius": radius, "row_sum": args.row_sum, "seed": args.seed,
         "weighting": args.weighting, "realized_mean_degree": g.mean_degree()}, indent=2) + "\n")
    out.finish()


def cmd_simulate(args):
    g = _load_graph(args)
    A = consensus_matrix(g)
    times = args.snapshot_times or [args.k_max]
    threads = _threads(args.threads)
    out = Outputs(args.out_dir, "simulate", args)
    if args.model == "consensus":
        z = "random" if str(args.z) == "random" else int(args.z)
        cfg = ConsensusConfig(A, z=z, k_max=args.k_max, ensemble_size=args.ensemble_size,
                              seed=args.seed, snapshot_times=tuple(times))
        run = simulate_consensus(cfg, threads=threads)
        out.write("snapshots.csv", simulation_csv(run.snapshots))
        out.write("input_nodes.csv", run.input_node_csv())
    else:
        pins = args.pins if args.pins is not None else [(0, 0), (g.n - 1, 1)]
        if args.initial == "random":
            init = "random"
        else:
            init = np.full(g.n, 1 if args.initial == "ones" else 0)
        cfg = VoterConfig(A, pinned=tuple(pins), k_max=args.k_max, ensemble_size=args.ensemble_size,
                          seed=args.seed, snapshot_times=tuple(times), initial_state=init)
        out.write("snapshots.csv", simulation_csv(simulate_voter(cfg, threads=threads), binary=True))
    out.finish()


def _k_grid(text, n):
    if str(text) == "all":
        return list(range(1, n + 1))
    grid = _int_list(text)
    bad = [k for k in grid if not 1 <= k <= n]
    if bad:
        raise UsageError(f"K values {bad} outside [1, {n}]")
    return grid


def cmd_compress(args):
    g = _load_graph(args)
    basis = eigenbasis(build_laplacian(g))
    snaps, kind = read_snapshots(args.snapshots, g.node_labels)
    if snaps and snaps[0].n != g.n:
        raise UsageError(f"snapshots have {snaps[0].n} entries but the graph has {g.n} nodes")
    grid = _k_grid(args.k_grid, g.n)
    curve = energy_curve(basis, snaps, grid, binary_match=args.round, refit=args.refit)
    key = "day" if kind == "field" else "instance_id"
    tables = {}
    if args.top:
        for s in snaps:
            tables[(s.instance_id, s.time_index)] = dominant_basis_table(
                basis, s, min(args.top, g.n))
    rep = CompressReport(args.label or Path(args.snapshots).stem, basis, curve, tables,
                         {"snapshots": str(args.snapshots), "graph": str(args.graph), "kind": kind})
    doc = rep.to_dict()
    if curve.F_refit is not None:
        doc["mean_refit_energy_fraction"] = [float(v) for v in curve.F_refit.mean(axis=0)]
    out = Outputs(args.out_dir, "compress", args)
    out.write("report.json", json.dumps(doc, indent=2) + "\n")
    out.write("energy_curve.csv", curve.to_csv(key=key))
    out.write("energy_mean.csv", curve.mean_csv())
    out.write("eigenvalues.csv", eigenvalue_csv(basis))
    if tables:
        out.write("dominant.csv", dominant_tables_csv(tables))
    out.finish()


def cmd_stats(args):
    g = _load_graph(args)
    basis = eigenbasis(build_laplacian(g))
    stats = theorem1_sigma(basis, args.z, args.k, exact=args.exact, require_simple=args.require_simple)
    out = Outputs(args.out_dir, "stats", args)
    out.write("C.csv", matrix_csv(stats.C))
    out.write("sigma.csv", matrix_csv(stats.Sigma))
    if args.whiten:
        wb = whitening_basis(basis, stats)
        prof = variance_decay_profile(wb)
        out.write("D.csv", "D\n" + "".join(f"{float(v)!r}\n" for v in wb.D))
        out.write("phi.csv", matrix_csv(wb.Phi))
        out.write("whitening.json", prof.to_json(k=args.k, z=args.z))
    out.finish()


def cmd_synth_field(args):
    g = _load_graph(args)
    params = {}
    if args.noise is not None:
        params["noise"] = args.noise
    if args.weekend_offset is not None:
        params["weekend_offset"] = args.weekend_offset
    values = synthesize_field_data(g, args.days, args.seed, **params)
    out = Outputs(args.out_dir, "synth-field", args)
    out.write("field_snapshots.csv", snapshot_csv(range(args.days), values, g.node_labels))
    out.finish()


def cmd_report(args):
    from .ingest import load_dataset

    if args.graph:
        ds = load_dataset(args.graph, args.snapshots, args.labels, args.coords)
    else:
        ds = load_dataset(data_path("us_states.edges"), args.snapshots,
                          data_path("us_states.labels"), data_path("us_states.coords"))
    basis = eigenbasis(build_laplacian(ds.graph))
    grid = _k_grid(args.k_grid, ds.graph.n)
    curve, fig5 = figure5_data(ds, basis, grid)
    tables = {(s.instance_id, s.time_index): dominant_basis_table(basis, s, min(args.top, ds.graph.n)) for s in ds.snapshots}
    rep = CompressReport(ds.label, basis, curve, tables, {"snapshots": str(args.snapshots)})
    out = Outputs(args.out_dir, "report", args)
    out.write("report.json", rep.to_json())
    out.write("figure5.csv", fig5)
    out.write("dominant.csv", dominant_tables_csv(tables))
    for idx in args.overlay or []:
        out.write(f"overlay_{idx}.csv", eigenvector_overlay(basis, idx, ds.graph))
    out.finish()


# --- parser -----------------------------------------------------------------


def build_parser() -> Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", required=True, help="directory for outputs and manifest.json")
    common.add_argument("--config", help="key=value file; command-line flags take precedence")
    common.add_argument("--threads", type=int, help="worker cap (env LAPCOMPRESS_THREADS; default all cores)")

    p = Parser(prog="lapcompress", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=Parser)

    s = sub.add_parser("gen-graph", parents=[common], help="random geometric graph")
    s.add_argument("--n", type=int, default=200, help="number of nodes (>= 2)")
    s.add_argument("--radius", type=float, help="connection radius (default: from --mean-degree)")
    s.add_argument("--mean-degree", type=float, default=10.0, help="target mean degree used to pick the radius")
    s.add_argument("--row-sum", type=float, default=0.8, help="incoming weight per node, in (0, 1)")
    s.add_argument("--weighting", choices=["in-normalized", "symmetric"], default="in-normalized",
                   help="edge weighting scheme")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.set_defaults(func=cmd_gen_graph)

    s = sub.add_parser("simulate", parents=[common], help="consensus or voter ensembles")
    s.add_argument("model", choices=["consensus", "voter"], help="which model to simulate")
    s.add_argument("--graph", required=True, help="edge-list file")
    s.add_argument("--k-max", type=int, default=400, help="simulation horizon")
    s.add_argument("--snapshot-times", type=_int_list, help="comma-separated snapshot times (default: k-max)")
    s.add_argument("--ensemble-size", type=int, default=100, help="number of instances")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--z", default="random", help="consensus input node index, or 'random'")
    s.add_argument("--pins", type=_pins, help="voter pins 'node:status,...' (default: first node 0, last node 1)")
    s.add_argument("--initial", choices=["random", "zeros", "ones"], default="random",
                   help="voter initial state")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("compress", parents=[common], help="K-sparse energy fractions of snapshots")
    s.add_argument("--graph", required=True, help="edge-list file")
    s.add_argument("--labels", help="node-label file")
    s.add_argument("--snapshots", required=True, help="snapshot CSV")
    s.add_argument("--k-grid", "--k", default="1,5,10,20,40", help="comma-separated K values, or 'all'")
    s.add_argument("--round", action="store_true", help="add rounded binary match fractions")
    s.add_argument("--refit", action="store_true", help="add least-squares refit energy fractions")
    s.add_argument("--top", type=int, default=4, help="dominant basis directions per snapshot (0 = none)")
    s.add_argument("--label", help="dataset label for the report")
    s.set_defaults(func=cmd_compress)

    s = sub.add_parser("stats", parents=[common], help="closed-form second moment and whitening basis")
    s.add_argument("--graph", required=True, help="edge-list file")
    s.add_argument("--z", type=int, default=0, help="input node")
    s.add_argument("--k", type=int, default=400, help="time index")
    s.add_argument("--exact", action="store_true", help="finite-k sums instead of the large-k form")
    s.add_argument("--require-simple", action="store_true", help="reject repeated eigenvalues")
    s.add_argument("--whiten", action="store_true", help="also export the whitening basis")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("synth-field", parents=[common], help="synthetic daily field data")
    s.add_argument("--graph", help="edge-list file (default: bundled state contiguity graph)")
    s.add_argument("--labels", help="node-label file")
    s.add_argument("--coords", help="node coordinate file")
    s.add_argument("--days", type=int, default=250, help="number of days")
    s.add_argument("--seed", type=int, default=0, help="random seed")
    s.add_argument("--noise", type=float, help="daily noise amplitude")
    s.add_argument("--weekend-offset", type=float, help="weekend bump amplitude")
    s.set_defaults(func=cmd_synth_field)

    s = sub.add_parser("report", parents=[common], help="per-day curves and eigenvector overlays for field data")
    s.add_argument("--graph", help="edge-list file (default: bundled state contiguity graph)")
    s.add_argument("--labels", help="node-label file")
    s.add_argument("--coords", help="node coordinate file")
    s.add_argument("--snapshots", required=True, help="field snapshot CSV")
    s.add_argument("--k-grid", "--k", default="1,5,10,20", help="comma-separated K values, or 'all'")
    s.add_argument("--top", type=int, default=4, help="dominant basis directions per day")
    s.add_argument("--overlay", type=_int_list, help="basis indices to export as overlays")
    s.set_defaults(func=cmd_report)
    return p


def _apply_config(parser: Parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        action = known[key]
        if action.type is not None:
            value = action.type(value)
        elif isinstance(action, argparse._StoreTrueAction):
            value = value.lower() in ("1", "true", "yes", "on")
        defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        args.func(args)
    except SystemExit:
        raise
    except UsageError as exc:
        _fail("UsageError", str(exc), code=2)
    except Exception as exc:  # surfaced as a one-line JSON error
        _fail(type(exc).__name__, str(exc).replace("\n", " "))
    return 0


if __name__ == "__main__":
    sys.exit(main())
