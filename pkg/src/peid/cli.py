"""peid command-line interface.

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure
(including a demo whose checks do not pass).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .continuous import (ConditionalGaussianPredictor, DegenerateCovarianceError, SweepConfig,
                         continuous_hypergraph, run_alpha_sweep)
from .core import SourcePartition, decompose, resolve
from .demos import DEMOS, run_demo
from .downward import dc_decomposition
from .graph import DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_MAX_ORDER, build_hypergraph, export_dot, export_json
from .mechanism import MechanismError, compile_tpm, dumps_tpm, loads_tpm, parse_network
from .multiscale import CoarseGrainingMap, SearchSpec, multiscale_report, search_coarse_graining

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

CONVENTIONS = """\
conventions:
  All information quantities are in bits (log base 2).
  Joint states use mixed-radix indexing with variable 0 as the most
  significant digit: for binary x0,x1,x2 the state (x0,x1,x2) has index
  4*x0 + 2*x1 + x2. TPM rows are the state at t, columns the state at t+1.
  Subsets and partitions accept variable names or indices, e.g.
  --sources x0,x1 and --partition "x0|x1".
  Randomized commands take --seed (default 0).
"""


class UsageError(Exception):
    pass


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    version: str = __version__
    seed: int | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _digest(path: str) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None


def _manifest(args, inputs: list[str], config: dict, seed: int | None = None) -> RunManifest:
    return RunManifest(args.command, {p: _digest(p) for p in inputs}, config, __version__, seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _json(doc: dict, manifest: RunManifest) -> str:
    doc = dict(doc)
    doc["manifest"] = manifest.to_dict()
    return json.dumps(doc, indent=2) + "\n"


def _split(text: str | None) -> list[str] | None:
    if text is None:
        return None
    items = [s.strip() for s in text.split(",") if s.strip()]
    return [int(s) if s.isdigit() else s for s in items]


def _load_tpm(path: str):
    return loads_tpm(_read(path))


# ---------------------------------------------------------------- commands

def cmd_compile(args) -> int:
    net = parse_network(_read(args.spec))
    tpm = compile_tpm(net)
    man = _manifest(args, [args.spec], {"variables": list(net.names)})
    _emit(dumps_tpm(tpm, man.to_dict()), args.output)
    return EXIT_OK


def cmd_decompose(args) -> int:
    tpm = _load_tpm(args.tpm)
    sources = _split(args.sources) or list(range(len(tpm.source)))
    targets = _split(args.targets) or list(range(len(tpm.target)))
    a = resolve(tpm.source, sources)
    partition = SourcePartition.parse(args.partition, tpm.source) if args.partition else None
    rep = decompose(tpm, a, partition, targets)
    man = _manifest(args, [args.tpm], {"sources": args.sources, "targets": args.targets,
                                       "partition": args.partition})
    _emit(_json(rep.to_dict(tpm.source, tpm.target), man), args.output)
    return EXIT_OK


def cmd_graph(args) -> int:
    tpm = _load_tpm(args.tpm)
    g = build_hypergraph(tpm, args.epsilon, args.max_order, args.target_mode, args.budget)
    config = {"epsilon": args.epsilon, "max_order": args.max_order,
              "target_mode": args.target_mode, "format": args.format}
    man = _manifest(args, [args.tpm], config)
    if args.format == "dot":
        text = "// manifest " + json.dumps(man.to_dict(), sort_keys=True) + "\n" + export_dot(g)
    else:
        text = export_json(g, man.to_dict()) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.name == "list":
        print("\n".join(DEMOS))
        return EXIT_OK
    if args.name not in DEMOS:
        raise UsageError(f"unknown demo {args.name!r}; choose from {', '.join(DEMOS)} or 'list'")
    result = run_demo(args.name, seed=args.seed)
    print(result.table())
    if args.output:
        man = _manifest(args, [], {"name": args.name}, args.seed)
        Path(args.output).write_text(_json(result.to_dict(), man))
    return EXIT_OK if result.passed else EXIT_NUMERIC


def cmd_downward(args) -> int:
    tpm = _load_tpm(args.tpm)
    if args.all:
        targets = list(range(len(tpm.target)))
    elif args.target is not None:
        targets = list(resolve(tpm.target, _split(args.target)))
        if len(targets) != 1:
            raise UsageError("--target takes a single variable")
    else:
        raise UsageError("give --target j or --all")
    reports = [dc_decomposition(tpm, j) for j in targets]
    names = tpm.source.names
    if args.format == "table":
        lines = [f"{'target':<10} {'DC':>10} {'flexibility':>12} {'env_synergy':>12}"]
        lines += [f"{names[r.target]:<10} {r.dc:>10.6f} {r.flexibility:>12.6f} {r.env_synergy:>12.6f}"
                  for r in reports]
        _emit("\n".join(lines), args.output)
    else:
        man = _manifest(args, [args.tpm], {"targets": [names[j] for j in targets]})
        _emit(_json({"reports": [r.to_dict(names) for r in reports]}, man), args.output)
    return EXIT_OK


def cmd_multiscale(args) -> int:
    tpm = _load_tpm(args.tpm)
    inputs = [args.tpm]
    config: dict = {"epsilon": args.epsilon, "max_order": args.max_order}
    doc: dict = {}
    if args.map:
        cg = CoarseGrainingMap.from_dict(json.loads(_read(args.map)))
        inputs.append(args.map)
    elif args.search:
        spec = SearchSpec(mode=args.search, budget=args.budget, top=args.top)
        ranked = search_coarse_graining(tpm, spec)
        config["search"] = spec.to_dict()
        doc["ranking"] = [{"ei": r.ei, "map": r.map.to_dict()} for r in ranked]
        cg = ranked[0].map
    else:
        raise UsageError("give a map file (--map) or --search grouping|exhaustive")
    rep = multiscale_report(tpm, cg, epsilon=args.epsilon, max_source_order=args.max_order)
    doc.update(rep.to_dict())
    _emit(_json(doc, _manifest(args, inputs, config)), args.output)
    return EXIT_OK


def cmd_sweep(args) -> int:
    inputs = []
    if args.config:
        cfg = SweepConfig.from_dict(json.loads(_read(args.config)))
        inputs.append(args.config)
    else:
        alphas = tuple(float(a) for a in args.alphas.split(","))
        cfg = SweepConfig(alphas, args.sigma_eps, args.length, args.samples, args.seed, args.correction)
    res = run_alpha_sweep(cfg, args.workers)
    man = _manifest(args, inputs, asdict(cfg), cfg.seed)
    if args.format == "csv":
        _emit("# manifest " + json.dumps(man.to_dict(), sort_keys=True) + "\n" + res.to_csv(), args.output)
    else:
        _emit(res.to_json(man.to_dict()) + "\n", args.output)
    return EXIT_OK


def cmd_predictor_graph(args) -> int:
    pred = ConditionalGaussianPredictor.loads(_read(args.predictor))
    g = continuous_hypergraph(pred, args.length, args.samples, args.seed, args.epsilon, args.correction)
    config = {"length": args.length, "samples": args.samples, "epsilon": args.epsilon,
              "correction": args.correction}
    man = _manifest(args, [args.predictor], config, args.seed)
    if args.format == "dot":
        text = "// manifest " + json.dumps(man.to_dict(), sort_keys=True) + "\n" + export_dot(g)
    else:
        text = export_json(g, man.to_dict()) + "\n"
    _emit(text, args.output)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.RawDescriptionHelpFormatter
    p = argparse.ArgumentParser(prog="peid", formatter_class=fmt, epilog=CONVENTIONS,
                                description="Effective information decomposition for discrete "
                                            "and continuous mechanisms.")
    p.add_argument("--version", action="version", version=f"peid {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_, func):
        sp = sub.add_parser(name, help=help_, description=help_, formatter_class=fmt, epilog=CONVENTIONS)
        sp.set_defaults(func=func)
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")
        return sp

    sp = add("compile", "compile a JSON Boolean network spec into a TPM file", cmd_compile)
    sp.add_argument("spec")

    sp = add("decompose", "unique/synergy decomposition of EI(A -> B) for one partition", cmd_decompose)
    sp.add_argument("tpm")
    sp.add_argument("--sources", help="source subset A (default: all)")
    sp.add_argument("--targets", help="target subset B (default: all)")
    sp.add_argument("--partition", help='blocks of A separated by "|" (default: singletons)')

    sp = add("graph", "pairwise EI graph plus synergy hyperedges", cmd_graph)
    sp.add_argument("tpm")
    sp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="existence threshold in bits")
    sp.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER, help="largest hyperedge source set")
    sp.add_argument("--target-mode", choices=["singletons", "all-subsets"], default="singletons")
    sp.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="cap on evaluated (A, B) pairs")
    sp.add_argument("--format", choices=["json", "dot"], default="json")

    sp = add("demo", "reproduce a reference result and print a PASS/FAIL table", cmd_demo)
    sp.add_argument("name", help=f"one of: {', '.join(DEMOS)}, or 'list'")
    sp.add_argument("--seed", type=int, default=0)

    sp = add("downward", "downward causation DC_j with its flexibility/environment split", cmd_downward)
    sp.add_argument("tpm")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--target", help="target variable j")
    grp.add_argument("--all", action="store_true", help="report every target")
    sp.add_argument("--format", choices=["json", "table"], default="json")

    sp = add("multiscale", "macro mechanism, macro EI and paired micro/macro graphs", cmd_multiscale)
    sp.add_argument("tpm")
    grp = sp.add_mutually_exclusive_group()
    grp.add_argument("--map", help="coarse-graining map JSON")
    grp.add_argument("--search", choices=["grouping", "exhaustive"], help="search for the best map")
    sp.add_argument("--budget", type=int, default=SearchSpec.budget)
    sp.add_argument("--top", type=int, default=SearchSpec.top)
    sp.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    sp.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER)

    sp = add("sweep", "continuous alpha sweep of the sin(X2 X3) mechanism", cmd_sweep)
    sp.add_argument("--config", help="JSON config {alphas, sigma_eps, L, M, seed, correction}")
    sp.add_argument("--alphas", default="0,0.25,0.5,0.75,1")
    sp.add_argument("--sigma-eps", type=float, default=0.05)
    sp.add_argument("--length", type=float, default=2.0, help="sources uniform on [-L/2, L/2]")
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--correction", choices=["none", "wishart"], default="none")
    sp.add_argument("--workers", type=int, default=1, help="processes; results do not depend on this")
    sp.add_argument("--format", choices=["json", "csv"], default="json")

    sp = add("predictor-graph", "continuous hypergraph of a conditional-Gaussian predictor",
             cmd_predictor_graph)
    sp.add_argument("predictor")
    sp.add_argument("--length", type=float, default=2.0)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--epsilon", type=float, default=0.05)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--correction", choices=["none", "wishart"], default="none")
    sp.add_argument("--format", choices=["json", "dot"], default="json")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except (DegenerateCovarianceError, ArithmeticError, FloatingPointError) as err:
        print(f"peid: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, MechanismError, ValueError, KeyError, TypeError, json.JSONDecodeError) as err:
        print(f"peid: error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
