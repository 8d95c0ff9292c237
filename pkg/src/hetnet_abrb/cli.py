"""Command-line entry point: ``hetnet-abrb {run,fixtures,compare}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from importlib import resources
from pathlib import Path

from .config import ConfigError, Scenario, load_scenario, parse_scenario
from .graph_b import build_interference_graph, to_adjacency_text
from .harness import ALGORITHMS, run_simulation
from .invariants import InvariantViolation
from .netmodel import FIG2_FIXTURE, FIG4_FIXTURE, build_network, fixture

EXIT_ERROR = 1
EXIT_INVARIANT = 3


def default_scenario(name: str = "default") -> Scenario:
    text = resources.files(__package__).joinpath("scenarios", f"{name}.cfg").read_text()
    return parse_scenario(text)


def _scenario(args) -> Scenario:
    sc = load_scenario(args.config) if args.config else default_scenario()
    if getattr(args, "debug", False):
        sc = Scenario(sc.network, dataclasses.replace(sc.simulation, debug=True))
    return sc


def _horizon(sc: Scenario, subframes):
    if subframes is None:
        return sc.simulation.n_superframes
    L_S = sc.network.superframe_len
    if subframes < L_S:
        raise ConfigError(f"--subframes {subframes} is shorter than one super-frame ({L_S})")
    return subframes // L_S


def _cmd_run(args) -> int:
    sc = _scenario(args)
    n_sf = _horizon(sc, args.subframes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace = open(out / "trace.tsv", "w") if args.trace else None
    try:
        rep = run_simulation(sc, args.algorithm, seed=args.seed, n_superframes=n_sf,
                             workers=args.workers, trace=trace)
    finally:
        if trace is not None:
            trace.close()
    (out / "metrics.jsonl").write_text(rep.jsonl())
    (out / "users.tsv").write_text(rep.users_tsv())
    f = rep.final
    print(f"{rep.algorithm}\tseed={rep.seed}\tpf_utility={f['pf_utility']:.4f}\t"
          f"worst10_kbps={f['worst10_kbps']:.1f}\tcell_capacity_mbps={f['cell_capacity_mbps']:.3f}")
    return 0


def _cmd_fixtures(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, doc in (("fig2", FIG2_FIXTURE), ("fig4", FIG4_FIXTURE)):
        (out / f"{name}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        ig = build_interference_graph(fixture(name)[1])
        (out / f"{name}.adj").write_text(to_adjacency_text(ig, labels=True))
    print(f"wrote fig2 and fig4 fixtures to {out}")
    return 0


COMPARE_KEYS = ("pf_utility", "worst10_kbps", "cell_capacity_mbps", "macro_i_kbps",
                "pico_i_kbps")


def _cmd_compare(args) -> int:
    sc = _scenario(args)
    n_sf = _horizon(sc, args.subframes)
    seed = sc.network.seed if args.seed is None else args.seed
    state, graph = build_network(sc.network, seed)
    reports = {a: run_simulation(sc, a, seed=seed, state=state, graph=graph, n_superframes=n_sf,
                                 workers=args.workers) for a in ALGORITHMS}
    rows = ["\t".join(("metric",) + ALGORITHMS)]
    for key in COMPARE_KEYS:
        rows.append("\t".join([key] + [f"{reports[a].final[key]:.4f}" for a in ALGORITHMS]))
    table = "\n".join(rows) + "\n"
    sys.stdout.write(table)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.tsv").write_text(table)
        for a, rep in reports.items():
            (out / f"{a}.metrics.jsonl").write_text(rep.jsonl())
            (out / f"{a}.users.tsv").write_text(rep.users_tsv())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hetnet-abrb",
                                description="Two-timescale ABRB control simulator for HetNets.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required):
        sp.add_argument("--config", required=config_required, metavar="PATH",
                        help="scenario INI file" + ("" if config_required
                                                    else " (default: bundled scenario)"))
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--subframes", type=int, default=None,
                        help="horizon in subframes, rounded down to whole super-frames")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--debug", action="store_true", help="check invariants every super-frame")

    r = sub.add_parser("run", help="simulate one scheme")
    common(r, True)
    r.add_argument("--algorithm", choices=ALGORITHMS, default="proposed")
    r.add_argument("--out", required=True, metavar="DIR")
    r.add_argument("--trace", action="store_true", help="also write per-decision trace.tsv")
    r.set_defaults(func=_cmd_run)

    f = sub.add_parser("fixtures", help="write the reference topology fixtures")
    f.add_argument("--out", default=".", metavar="DIR")
    f.set_defaults(func=_cmd_fixtures)

    c = sub.add_parser("compare", help="paired run of all schemes on one seed")
    common(c, False)
    c.add_argument("--out", default=None, metavar="DIR")
    c.set_defaults(func=_cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"hetnet-abrb: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (ConfigError, ValueError, OSError) as exc:
        print(f"hetnet-abrb: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
