"""Command-line front end.

Every subcommand builds a JSON report ``{"schema", "command", "config",
"result"}`` and prints a one-line summary.  The report goes to ``--output``
(``-`` for stdout) or replaces the summary on stdout with ``--json``.
Exit codes: 0 success, 2 not found / undecided / property false, 1 error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import time
from contextlib import contextmanager
from fractions import Fraction
from typing import Sequence

from . import __version__
from .fields import Interval, UnsupportedFieldError, parse_field
from .gnn import ModelError, RecurrentGNN, gnn_run, random_relu_gnn
from .graphs import DegreeSpec, GraphError, InvalidSpecError, LabeledGraph, make_tree, random_graph
from .polylab import (
    BoundParams,
    PreconditionError,
    RegionTooSmallError,
    extract_region_poly,
    min_box_size,
    multiset_count,
    value_count_bound,
)
from .refine import cr_compare, cr_run, first_separating_round
from .search import (
    UnsupportedActivationError,
    Verdict,
    check_cr_refines_gnn,
    exhaustive_separation,
    find_collision,
    separate_roots,
    verify_collision,
)

SCHEMA = "gnn-sep-lab/1"
EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2

log = logging.getLogger("gnnseplab")


class CliError(Exception):
    """User-facing failure; the message names the offending flag or field."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message)


class _Profiler:
    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            if self.enabled:
                print(f"profile {name}: {time.perf_counter() - start:.4f}s", file=sys.stderr)


def _read_json(path: str, flag: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"{flag}: cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(f"{flag}: malformed JSON in {path}: {exc}") from exc


def _load_model(path: str) -> RecurrentGNN:
    try:
        return RecurrentGNN.from_json(_read_json(path, "--model"))
    except ModelError as exc:
        raise CliError(f"--model: {exc}") from exc


def _load_graph(path: str) -> LabeledGraph:
    try:
        return LabeledGraph.from_json(_read_json(path, "--graph"))
    except (GraphError, KeyError, TypeError) as exc:
        raise CliError(f"--graph: {exc}") from exc


def _spec(text: str) -> DegreeSpec:
    try:
        return DegreeSpec.parse(text)
    except (InvalidSpecError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"invalid degree spec {text!r}: {exc}") from exc


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _scalar_json(x):
    if isinstance(x, Interval):
        return x.to_json()
    return str(Fraction(x))


def _field(args):
    try:
        return parse_field(args.field)
    except ValueError as exc:
        raise CliError(f"--field: {exc}") from exc


def _require_rational(args) -> None:
    if args.field != "rational":
        raise CliError(f"--field: {args.command} works in exact rational arithmetic only, got {args.field!r}")


# subcommands: each returns (exit code, config, result, summary)

def cmd_cr(args, prof):
    if args.graph:
        with prof.phase("load"):
            g = _load_graph(args.graph)
        with prof.phase("refine"):
            trace = cr_run(g, args.rounds)
        config = {"graph": args.graph, "rounds": args.rounds}
        return EXIT_OK, config, trace.to_json(), f"stable_round={trace.stable_round} classes={trace.colorings[-1].num_classes}"
    if not (args.a and args.b):
        raise CliError("--graph or both --a and --b are required")
    ta, tb = make_tree(args.a), make_tree(args.b)
    rounds = 2 if args.rounds is None else args.rounds
    with prof.phase("refine"):
        sep = cr_compare(ta, tb, rounds)
        first = first_separating_round(ta, tb)
    config = {"a": list(args.a.degrees), "b": list(args.b.degrees), "rounds": rounds}
    result = {"separated": sep, "first_separating_round": first}
    return EXIT_OK, config, result, f"separated at round {rounds}: {str(sep).lower()}"


def cmd_gnn(args, prof):
    field = _field(args)
    with prof.phase("load"):
        gnn = _load_model(args.model)
        if args.graph:
            g = _load_graph(args.graph)
        elif args.spec:
            g = make_tree(args.spec).graph
        else:
            raise CliError("--graph or --spec is required")
    with prof.phase("evaluate"):
        try:
            table = gnn_run(gnn, g, args.iters, field)
        except UnsupportedFieldError as exc:
            raise CliError(f"--field: {exc}") from exc
        except ModelError as exc:
            raise CliError(f"--graph: {exc}") from exc
    config = {
        "model": args.model,
        "graph": args.graph,
        "spec": list(args.spec.degrees) if args.spec else None,
        "iters": args.iters,
        "field": args.field,
    }
    result = {"embeddings": [[[_scalar_json(x) for x in vec] for vec in row] for row in table]}
    return EXIT_OK, config, result, f"{args.iters} iterations on {g.n} vertices"


def cmd_collide(args, prof):
    _require_rational(args)
    with prof.phase("load"):
        gnn = _load_model(args.model)
    m_values = args.m or [2]
    with prof.phase("search"):
        try:
            res = find_collision(gnn, args.iters, m_values, args.m_max, threads=args.threads)
        except UnsupportedActivationError as exc:
            raise CliError(f"--model: {exc}") from exc
    config = {"model": args.model, "iters": args.iters, "m": m_values, "m_max": args.m_max, "threads": args.threads}
    if res is None:
        return EXIT_NEGATIVE, config, {"status": "not_found"}, "not found within budget"
    result = {"status": "found", **res.to_json()}
    return EXIT_OK, config, result, f"collision {res.spec_a} / {res.spec_b}"


def cmd_verify(args, prof):
    _require_rational(args)
    with prof.phase("load"):
        gnn = _load_model(args.model)
    with prof.phase("verify"):
        try:
            ok = verify_collision(gnn, args.iters, args.a, args.b)
        except UnsupportedActivationError as exc:
            raise CliError(f"--model: {exc}") from exc
    config = {"model": args.model, "iters": args.iters, "a": list(args.a.degrees), "b": list(args.b.degrees)}
    return (EXIT_OK if ok else EXIT_NEGATIVE), config, {"collision": ok}, f"collision: {str(ok).lower()}"


_VERDICT_NAMES = {
    Verdict.ISOMORPHIC: "Isomorphic",
    Verdict.DISTINCT_CERTIFIED: "DistinctCertified",
    Verdict.UNDECIDED: "Undecided",
}


def cmd_separate(args, prof):
    with prof.phase("separate"):
        try:
            v = separate_roots(args.activation, args.a, args.b, args.max_bits)
        except UnsupportedActivationError as exc:
            raise CliError(f"--activation: {exc}") from exc
    config = {"activation": args.activation, "a": list(args.a.degrees), "b": list(args.b.degrees), "max_bits": args.max_bits}
    code = EXIT_NEGATIVE if v.verdict is Verdict.UNDECIDED else EXIT_OK
    summary = _VERDICT_NAMES[v.verdict] + (f" at {v.bits} bits" if v.verdict is Verdict.DISTINCT_CERTIFIED else "")
    return code, config, v.to_json(), summary


def cmd_exhaustive(args, prof):
    with prof.phase("separate"):
        try:
            rep = exhaustive_separation(args.activation, args.max_vertices, args.max_bits)
        except UnsupportedActivationError as exc:
            raise CliError(f"--activation: {exc}") from exc
    config = {"activation": args.activation, "max_vertices": args.max_vertices, "max_bits": args.max_bits}
    summary = f"{rep.certified}/{rep.pairs} pairs certified, {rep.undecided} undecided, {rep.oracle_disagreements} oracle disagreements"
    return (EXIT_OK if rep.success else EXIT_NEGATIVE), config, rep.to_json(), summary


def cmd_poly(args, prof):
    _require_rational(args)
    with prof.phase("load"):
        gnn = _load_model(args.model)
    seed = args.spec.degrees
    with prof.phase("extract"):
        try:
            fit = extract_region_poly(gnn, len(seed), args.t, seed, holdout=args.holdout, max_radius=args.max_radius)
        except PreconditionError as exc:
            raise CliError(f"--model: {exc}") from exc
        except RegionTooSmallError as exc:
            config = {"model": args.model, "spec": list(seed), "t": args.t, "holdout": args.holdout, "max_radius": args.max_radius}
            return EXIT_NEGATIVE, config, {"status": "region_too_small", "detail": str(exc)}, "region too small"
    config = {"model": args.model, "spec": list(seed), "t": args.t, "holdout": args.holdout, "max_radius": args.max_radius}
    result = {
        "status": "ok",
        "poly": fit.poly.to_json(),
        "signature": list(fit.signature),
        "degree_bound": fit.degree_bound,
        "fit_points": [list(p) for p in fit.fit_points],
        "holdout_points": [list(p) for p in fit.holdout_points],
    }
    return EXIT_OK, config, result, repr(fit.poly)


def cmd_bound(args, prof):
    try:
        p = BoundParams(args.m, args.q, args.T, args.M, args.lam)
    except PreconditionError as exc:
        raise CliError(str(exc)) from exc
    b = value_count_bound(p)
    config = {"m": args.m, "q": args.q, "T": args.T, "M": args.M, "lambda": args.lam}
    return EXIT_OK, config, {"bound": str(b)}, str(b)


def cmd_boxsize(args, prof):
    try:
        M = min_box_size(args.m, args.q, args.iters, args.r, args.lam)
    except PreconditionError as exc:
        raise CliError(f"--m: {exc}") from exc
    config = {"m": args.m, "q": args.q, "iters": args.iters, "r": args.r, "lambda": args.lam}
    result = {"M": str(M), "multisets": str(multiset_count(M, args.m))}
    return EXIT_OK, config, result, str(M)


def cmd_refines(args, prof):
    _require_rational(args)
    if args.model or args.graph:
        if not (args.model and args.graph):
            raise CliError("--model and --graph must be given together")
        gnn, g = _load_model(args.model), _load_graph(args.graph)
        d = args.rounds if args.rounds is not None else 2
        try:
            ok = check_cr_refines_gnn(gnn, g, d)
        except (ModelError, UnsupportedActivationError) as exc:
            raise CliError(f"--model: {exc}") from exc
        config = {"model": args.model, "graph": args.graph, "rounds": d}
        return (EXIT_OK if ok else EXIT_NEGATIVE), config, {"cases": 1, "violations": int(not ok)}, f"refines: {str(ok).lower()}"
    rng = random.Random(args.seed)
    violations = []
    with prof.phase("campaign"):
        for i in range(args.graphs):
            d = rng.randint(1, args.max_d)
            g = random_graph(rng, rng.randint(1, args.max_n), rng.uniform(0.1, 0.6), num_colors=rng.randint(1, d))
            gnn = random_relu_gnn(rng, d)
            if not check_cr_refines_gnn(gnn, g, d):
                violations.append(i)
    config = {"graphs": args.graphs, "max_n": args.max_n, "max_d": args.max_d, "seed": args.seed}
    result = {"cases": args.graphs, "violations": len(violations), "violating_cases": violations}
    code = EXIT_OK if not violations else EXIT_NEGATIVE
    return code, config, result, f"{len(violations)} violations in {args.graphs} cases"


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--field", default="rational", help="rational | interval:BITS")
    common.add_argument("--threads", type=_positive, default=1)
    common.add_argument("--profile", action="store_true", help="per-phase timings on stderr")
    common.add_argument("--output", help="write the JSON report here ('-' for stdout)")
    common.add_argument("--json", action="store_true", help="print the report instead of the summary")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="gnnseplab", description="Separation experiments for recurrent GNNs on depth-two trees.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("cr", parents=[common], help="color refinement trace or tree comparison")
    s.add_argument("--graph")
    s.add_argument("--a", type=_spec)
    s.add_argument("--b", type=_spec)
    s.add_argument("--rounds", type=_nonneg)
    s.set_defaults(func=cmd_cr)

    s = sub.add_parser("gnn", parents=[common], help="run a recurrent GNN")
    s.add_argument("--model", required=True)
    s.add_argument("--graph")
    s.add_argument("--spec", type=_spec)
    s.add_argument("--iters", type=_nonneg, default=2)
    s.set_defaults(func=cmd_gnn)

    s = sub.add_parser("collide", parents=[common], help="search for a tree collision")
    s.add_argument("--model", required=True)
    s.add_argument("--iters", type=_positive, default=2)
    s.add_argument("--m", type=_positive, action="append", help="repeatable")
    s.add_argument("--m-max", type=_positive, default=10)
    s.set_defaults(func=cmd_collide)

    s = sub.add_parser("verify", parents=[common], help="verify a collision on the full trees")
    s.add_argument("--model", required=True)
    s.add_argument("--iters", type=_positive, default=2)
    s.add_argument("--a", type=_spec, required=True)
    s.add_argument("--b", type=_spec, required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("separate", parents=[common], help="certify two roots apart")
    s.add_argument("--activation", required=True)
    s.add_argument("--a", type=_spec, required=True)
    s.add_argument("--b", type=_spec, required=True)
    s.add_argument("--max-bits", type=_positive, default=512)
    s.set_defaults(func=cmd_separate)

    s = sub.add_parser("exhaustive-separate", parents=[common], help="certify all small tree pairs")
    s.add_argument("--activation", required=True)
    s.add_argument("--max-vertices", type=_positive, default=13)
    s.add_argument("--max-bits", type=_positive, default=512)
    s.set_defaults(func=cmd_exhaustive)

    s = sub.add_parser("poly", parents=[common], help="extract a region polynomial")
    s.add_argument("--model", required=True)
    s.add_argument("--spec", type=_spec, required=True, help="seed point k")
    s.add_argument("--t", type=_nonneg, default=2)
    s.add_argument("--holdout", type=_positive, default=20)
    s.add_argument("--max-radius", type=_nonneg, default=8)
    s.set_defaults(func=cmd_poly)

    s = sub.add_parser("bound", parents=[common], help="value-count bound")
    for flag in ("--m", "--q", "--T", "--M"):
        s.add_argument(flag, type=_positive, required=True)
    s.add_argument("--lambda", dest="lam", type=_positive, default=1)
    s.set_defaults(func=cmd_bound)

    s = sub.add_parser("boxsize", parents=[common], help="smallest box side forcing a collision")
    s.add_argument("--m", type=_positive, required=True)
    s.add_argument("--q", type=_positive, default=1)
    s.add_argument("--iters", type=_positive, default=1)
    s.add_argument("--r", type=_positive, default=1)
    s.add_argument("--lambda", dest="lam", type=_positive, default=1)
    s.set_defaults(func=cmd_boxsize)

    s = sub.add_parser("refines", parents=[common], help="check that refinement refines GNN embeddings")
    s.add_argument("--model")
    s.add_argument("--graph")
    s.add_argument("--rounds", type=_nonneg)
    s.add_argument("--graphs", type=_positive, default=100)
    s.add_argument("--max-n", type=_positive, default=12)
    s.add_argument("--max-d", type=_positive, default=4)
    s.set_defaults(func=cmd_refines)
    return p


def _write_report(args, report: dict) -> None:
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.json:
        sys.stdout.write(text)
    if args.output and args.output != "-":
        try:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"--output: cannot write {args.output}: {exc.strerror}") from exc


def run_cli(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.output == "-":
        args.json = True
    prof = _Profiler(args.profile)
    try:
        code, config, result, summary = args.func(args, prof)
        report = {"schema": SCHEMA, "command": args.command, "config": config, "result": result}
        with prof.phase("write"):
            _write_report(args, report)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if not args.json:
        print(summary)
    return code


def main() -> None:
    sys.exit(run_cli())
