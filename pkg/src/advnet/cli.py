"""Command-line front end: ``advnet {mincut,rate,run,demo-symmetrize}``.

Exit codes: 0 success, 1 a requested threshold was violated (or the
symmetrization observations differ), 2 usage, parse or IO errors.
"""

import argparse
from dataclasses import dataclass
import math
import os
from pathlib import Path
import sys
import warnings

import numpy as np

from .adversary import STRATEGIES, FixedCode, strategy_from_name, symmetrize_transcripts
from .errors import AdvnetError, NetworkFormatError
from .harness import run_experiment, wilson_interval
from .galois import FieldParams
from .secretcode import CodeParams, CoefficientTable, sample_secrets
from .topology import (
    General,
    NodeBased,
    adversary_sets,
    delete_edges,
    expand_capacities,
    min_cut,
    parse_network,
    residual_rate,
)

EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    pass


def _read(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load(path):
    try:
        return parse_network(_read(path))
    except NetworkFormatError as exc:
        raise CliError(f"{path}: {exc}") from None


def _network_arg(args):
    path = args.network or args.network_file
    if not path:
        raise CliError("a network file is required (positional or --network)")
    return path


def parse_sets_file(text):
    """One adversary edge set per line; ``-`` is the empty set.

    ``adversary set`` prefixes (as in network files) are accepted and ignored.
    """
    sets = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if tok[:2] == ["adversary", "set"]:
            tok = tok[2:]
        elif not tok:
            continue
        sets.append(frozenset() if tok == ["-"] else frozenset(tok))
    return General(sets)


def _adversary(args, net):
    value = args.adversary
    if value is None:
        return net.adversary if net.adversary is not None else NodeBased(0)
    if value.startswith("node-based:z="):
        try:
            z = int(value.split("=", 1)[1])
        except ValueError:
            raise CliError(f"bad z in --adversary {value!r}") from None
        if z < 0:
            raise CliError("z must be non-negative")
        return NodeBased(z)
    if value.startswith("sets:"):
        return parse_sets_file(_read(value[5:]))
    raise CliError(f"--adversary must be node-based:z=K or sets:FILE, not {value!r}")


def _unit(net, spec):
    # the simulator runs on unit-capacity edges
    if all(e.capacity == 1 for e in net.edges):
        return net, spec
    return expand_capacities(net, spec)


def _deleted(net, items):
    ids = []
    for item in items:
        for tok in item.replace(",", " ").split():
            if tok.startswith("out:"):
                node = tok[4:]
                if node not in net.nodes:
                    raise CliError(f"unknown node {node!r} in --deleted-edges")
                ids.extend(e.id for e in net.out_edges(node))
            else:
                ids.append(tok)
    return ids


def _fmt_set(s):
    return "{" + ", ".join(sorted(s)) + "}"


def cmd_mincut(args, out):
    net = _load(_network_arg(args))
    ids = _deleted(net, args.deleted_edges or [])
    try:
        g = delete_edges(net, ids)
    except AdvnetError as exc:
        raise CliError(str(exc)) from None
    for t in net.destinations:
        print(f"min-cut({net.source} -> {t}) = {min_cut(g, net.source, t)}", file=out)
    return EXIT_OK


def cmd_rate(args, out):
    net = _load(_network_arg(args))
    spec = _adversary(args, net)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sets = adversary_sets(net, spec)
        r = residual_rate(net, spec)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    delta = (len(net.nodes) - 1) * r * r
    print(f"r = {r}", file=out)
    print(f"delta = {delta}", file=out)
    print(f"adversary sets = {len(sets)}", file=out)
    for s in sets:
        print(f"  {_fmt_set(s)}", file=out)
    return EXIT_OK


@dataclass
class RunSpec:
    network: str
    adversary: object
    strategies: tuple
    n: int
    m: int
    p: int
    trials: int
    workers: int
    seed: int
    out: str
    fmt: str
    secrets: bool
    fixed_coefficients: bool


def _positive(name):
    def check(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return v
    return check


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("ADVNET_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise CliError(f"ADVNET_SEED={env!r} is not an integer") from None


def _strategies(text):
    names = list(STRATEGIES) if text == "all" else [s.strip() for s in text.split(",") if s.strip()]
    try:
        return tuple(strategy_from_name(n) for n in names)
    except AdvnetError as exc:
        raise CliError(str(exc)) from None


def cmd_run(args, out):
    net = _load(_network_arg(args))
    spec = _adversary(args, net)
    net, spec = _unit(net.with_adversary(None), spec)
    run = RunSpec(_network_arg(args), spec, _strategies(args.strategy), args.n, args.m, args.p,
                  args.trials, args.workers, _seed(args), args.out, args.format, not args.no_secrets,
                  args.fixed_coefficients)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        report = run_experiment(net, run.adversary, run.strategies, run.n, run.m, run.trials,
                                workers=run.workers, seed=run.seed, p=run.p, secrets=run.secrets,
                                fixed_coefficients=run.fixed_coefficients)
    text, csv_text = report.to_text(), report.to_csv()
    print(text if run.fmt == "text" else csv_text, end="", file=out)
    if run.out:
        base = Path(run.out)
        try:
            Path(f"{base}.txt").write_text(text)
            Path(f"{base}.csv").write_text(csv_text)
        except OSError as exc:
            raise CliError(f"cannot write report: {exc}") from None

    violated = []
    for row in report.rows:
        label = f"{row.adversary_set}/{row.strategy}"
        if args.max_pe is not None and row.empirical_pe > args.max_pe:
            violated.append(f"{label}: P_e {row.empirical_pe:.3g} > {args.max_pe}")
        if args.max_false_accept_rate is not None and row.false_accept_rate > args.max_false_accept_rate:
            violated.append(f"{label}: false-accept rate {row.false_accept_rate:.3g} > {args.max_false_accept_rate}")
        if args.check_bounds and row.corrupted:
            lo, hi = wilson_interval(row.false_accepts, row.corrupted)
            slack = 3 * (hi - lo) / 2
            if row.false_accept_rate > row.lemma1_bound + slack:
                violated.append(f"{label}: false-accept rate {row.false_accept_rate:.3g} exceeds "
                                f"per-packet bound {row.lemma1_bound:.3g} + 3 half-widths")
        if args.check_bounds:
            b = min(1.0, row.union_bound + row.rank_failures / row.trials)
            limit = b + 3 * math.sqrt(b * (1 - b) / row.trials)
            if row.empirical_pe > limit:
                violated.append(f"{label}: P_e {row.empirical_pe:.3g} exceeds union bound plus rank "
                                f"failures {b:.3g} + 3 sigma")
    for v in violated:
        print(f"THRESHOLD VIOLATED {v}", file=sys.stderr)
    return EXIT_THRESHOLD if violated else EXIT_OK


# -- symmetrization demo --------------------------------------------------

@dataclass
class Scenario:
    network: object
    a1: frozenset
    a2: frozenset
    w1: bytes
    w2: bytes
    n: int
    m: int
    p: int
    secrets: bool
    seed: int
    r: int = None


_SCENARIO_WORDS = ("scenario", "message", "code")


def parse_scenario(text):
    """Network lines plus ``scenario a1|a2 <edge>...``, ``message w1|w2 <hex>``
    and ``code n=<int> m=<int> [r=<int>] [p=<int>] [seed=<int>] [secrets]``.

    Without ``r=`` the code rate is the residual rate of the network's own
    adversary declaration (the plain min-cut when there is none).
    """
    net_lines, found, code = [], {}, {"p": 2, "seed": 0, "secrets": False}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split("#", 1)[0].split()
        if not tok or tok[0] not in _SCENARIO_WORDS:
            net_lines.append(raw)
            continue
        net_lines.append("")
        kind = tok[0]
        if kind == "scenario":
            if len(tok) < 2 or tok[1] not in ("a1", "a2"):
                raise NetworkFormatError("expected: scenario a1|a2 <edge-id> ...", lineno)
            found[tok[1]] = frozenset(tok[2:])
        elif kind == "message":
            if len(tok) != 3 or tok[1] not in ("w1", "w2"):
                raise NetworkFormatError("expected: message w1|w2 <hex>", lineno)
            try:
                found[tok[1]] = bytes.fromhex(tok[2])
            except ValueError:
                raise NetworkFormatError(f"message {tok[1]} is not valid hex", lineno) from None
        else:
            for item in tok[1:]:
                if item == "secrets":
                    code["secrets"] = True
                    continue
                key, _, val = item.partition("=")
                if key not in ("n", "m", "r", "p", "seed") or not val.isdigit():
                    raise NetworkFormatError(f"bad code option {item!r}", lineno)
                code[key] = int(val)
    net = parse_network("\n".join(net_lines))
    for key in ("a1", "a2", "w1", "w2"):
        if key not in found:
            raise NetworkFormatError(f"scenario file lacks {key}")
    if "n" not in code or "m" not in code:
        raise NetworkFormatError("scenario file lacks a code line with n= and m=")
    unknown = sorted((found["a1"] | found["a2"]) - set(net.edge_by_id))
    if unknown:
        raise NetworkFormatError(f"scenario names unknown edge(s) {unknown}")
    return Scenario(net, found["a1"], found["a2"], found["w1"], found["w2"],
                    code["n"], code["m"], code["p"], code["secrets"], code["seed"], code.get("r"))


def symmetrize_scenario(sc, secrets=None, secret_seed=None):
    """Run both scenarios of ``sc``; returns the Symmetrization record."""
    use_secrets = sc.secrets if secrets is None else secrets
    net = sc.network
    r = sc.r if sc.r is not None else residual_rate(net, net.adversary or NodeBased(0))
    if r < 1:
        raise CliError("the scenario's code has rate 0; give r= on the code line")
    order = tuple(sorted(v for v in net.nodes if v != net.source))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = CodeParams(FieldParams(sc.p, sc.m), sc.n, r, order, use_secrets)
    f = params.field
    w1, w2 = f.unpack(sc.w1), f.unpack(sc.w2)
    size = params.n * params.r
    for name, w in (("w1", w1), ("w2", w2)):
        if w.size != size:
            raise CliError(f"message {name} has {w.size} symbols, the code needs n*r = {size}")
    code = FixedCode(params, CoefficientTable.generate(sc.network, params, sc.seed))
    bundle = None
    if use_secrets:
        seed = sc.seed if secret_seed is None else secret_seed
        bundle = sample_secrets(np.random.default_rng([seed, 1]), params)
    return symmetrize_transcripts(code, sc.network, sc.a1, sc.a2, w1, w2, secrets=bundle)


def cmd_demo_symmetrize(args, out):
    try:
        sc = parse_scenario(_read(args.scenario))
    except NetworkFormatError as exc:
        raise CliError(f"{args.scenario}: {exc}") from None
    secrets = True if args.secrets else None
    try:
        sym = symmetrize_scenario(sc, secrets)
    except AdvnetError as exc:
        raise CliError(str(exc)) from None
    secured = any(p.h.size for p in sym.transcripts[0].packets.values())
    mode = "with secrets" if secured else "without secrets (s = 0)"
    print(f"destination {sym.destination}; cut {{{', '.join(sym.cut)}}}; code {mode}", file=out)
    print(f"scenario 1: sends w1, forges {_fmt_set(sym.forged[0])} with w2's packets", file=out)
    print(f"scenario 2: sends w2, forges {_fmt_set(sym.forged[1])} with w1's packets", file=out)
    for eid in dict.fromkeys(sym.cut + sym.in_edges):
        b1, b2 = sym.packet_bytes(0, eid), sym.packet_bytes(1, eid)
        verdict = "IDENTICAL" if b1 == b2 else "DIFFERENT"
        print(f"  {eid}: {verdict}", file=out)
        print(f"    scenario 1: {b1.hex()}", file=out)
        print(f"    scenario 2: {b2.hex()}", file=out)
        if eid in sym.in_edges:
            v1, v2 = sym.verdicts(0)[eid], sym.verdicts(1)[eid]
            print(f"    verification: {_valid(v1)} / {_valid(v2)}", file=out)
    print("IDENTICAL" if sym.identical else "DIFFERENT", file=out)
    return EXIT_OK if sym.identical else EXIT_THRESHOLD


def _valid(v):
    return "Valid" if v else "Invalid"


def build_parser():
    parser = argparse.ArgumentParser(prog="advnet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def network_args(p):
        p.add_argument("network_file", nargs="?", help="network description file")
        p.add_argument("--network", help="network description file (alternative to the positional)")

    p = sub.add_parser("mincut", help="min-cut from the source to each destination")
    network_args(p)
    p.add_argument("--deleted-edges", action="append", metavar="IDS",
                   help="edge ids to delete, comma separated; out:NODE deletes NODE's outgoing edges")
    p.set_defaults(func=cmd_mincut)

    p = sub.add_parser("rate", help="residual rate r, header length delta and the adversary sets")
    network_args(p)
    p.add_argument("--adversary", help="node-based:z=K or sets:FILE (default: the network file's declaration)")
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("run", help="Monte-Carlo experiment, one report row per adversary set and strategy")
    network_args(p)
    p.add_argument("--adversary", help="node-based:z=K or sets:FILE (default: the network file's declaration)")
    p.add_argument("--strategy", default="silent",
                   help=f"comma separated list from {{{','.join(STRATEGIES)}}} or 'all'")
    p.add_argument("--n", type=_positive("--n"), default=16, help="payload symbols per packet")
    p.add_argument("--m", type=_positive("--m"), default=32, help="field extension degree")
    p.add_argument("--p", type=_positive("--p"), default=2, help="field characteristic")
    p.add_argument("--trials", type=_positive("--trials"), default=1000)
    p.add_argument("--workers", type=_positive("--workers"), default=1)
    p.add_argument("--seed", type=int, help="master seed (default: $ADVNET_SEED, else 0)")
    p.add_argument("--out", help="write PATH.txt and PATH.csv")
    p.add_argument("--format", choices=("text", "csv"), default="text", help="stdout format")
    p.add_argument("--no-secrets", action="store_true", help="run the code without hash headers")
    p.add_argument("--fixed-coefficients", action="store_true",
                   help="use one coefficient table for all trials (always on for symmetrize)")
    p.add_argument("--max-pe", type=float, help="exit 1 if any row's empirical P_e exceeds this")
    p.add_argument("--max-false-accept-rate", type=float,
                   help="exit 1 if any row's false-accept rate exceeds this")
    p.add_argument("--check-bounds", action="store_true",
                   help="exit 1 if a false-accept rate exceeds the per-packet bound by more than 3 Wilson "
                        "half-widths, or P_e exceeds the union bound plus the rank-failure rate by 3 sigma")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("demo-symmetrize", help="compare destination observations under a symmetrization attack")
    p.add_argument("scenario", help="scenario file: network lines plus scenario/message/code lines")
    p.add_argument("--secrets", action="store_true", help="enable hash headers regardless of the scenario file")
    p.set_defaults(func=cmd_demo_symmetrize)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (CliError, AdvnetError) as exc:
        print(f"advnet: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
