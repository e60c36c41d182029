"""Command-line interface: ``tipeq generate | solve | verify | opt``.

Exit codes: 0 ok, 1 verification failed, 2 input error, 3 no equilibrium of the
requested kind was constructed, 4 brute-force size cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from fractions import Fraction

from . import equilibrium as eq
from .instances import FAMILIES, InstanceSpec, generate
from .market import Market, MarketError, normalize_store_costs, validate_allocation, welfare
from .serialize import allocation_to_list, encode_rational, load_market, save_market
from .welfare import (CAP_ENV, CapExceededError, StructureKind, brute_cap, detect_cost_structure,
                      efficient_equilibrium_structured, optimal_equilibrium_welfare_bruteforce,
                      optimal_welfare_bruteforce, optimal_welfare_flow,
                      optimal_welfare_single_minded)

REPORT_SCHEMA = "tipeq.report/1"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_NONE, EXIT_CAP = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code=EXIT_INPUT):
        super().__init__(message)
        self.code = code


def write_atomic(path: str, data: bytes) -> None:
    """Write via a temporary file in the target directory, then rename."""
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror}") from None


def _emit(args, data: bytes) -> None:
    if args.output and args.output != "-":
        write_atomic(args.output, data)
    else:
        sys.stdout.write(data.decode())


def _digest(market: Market) -> dict:
    return {"dims": list(market.dims), "structure": detect_cost_structure(market).kind.value,
            "store_costs": market.has_store_costs}


def _q(x: Fraction) -> str:
    return str(encode_rational(x))


def _render_table(report: dict) -> str:
    rows = []

    def walk(prefix, value):
        if isinstance(value, dict):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else k, v)
        elif isinstance(value, list) and value and isinstance(value[0], (dict, list)):
            for i, v in enumerate(value):
                walk(f"{prefix}[{i}]", v)
        else:
            rows.append((prefix, value))

    walk("", report)
    width = max(len(k) for k, _ in rows)
    lines = []
    for k, v in rows:
        text = json.dumps(v) if not isinstance(v, str) else v
        if isinstance(v, str) and "/" in v and k.split(".")[-1] in ("welfare", "optimal_welfare",
                                                                     "optimal_equilibrium_welfare"):
            text += f"  (~{float(Fraction(v)):.6g}, approximate)"
        lines.append(f"{k.ljust(width)}  {text}")
    return "\n".join(lines) + "\n"


def _finish(args, report: dict, started: float) -> None:
    report["timing"] = {"seconds": round(time.perf_counter() - started, 6)}
    if getattr(args, "report", None):
        write_atomic(args.report, (json.dumps(report, indent=2) + "\n").encode())
    if args.format == "json":
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    else:
        sys.stdout.write(_render_table(report))


def _base_report(argv, command):
    return {"schema": REPORT_SCHEMA, "command": command, "argv": list(argv)}


def cmd_generate(args, argv) -> int:
    if args.spec:
        spec = InstanceSpec.from_json(_read(args.spec))
    else:
        if not args.family:
            raise CliError("generate needs --family or --spec")
        hyper = ()
        if args.hyperedges:
            try:
                hyper = tuple(tuple(e) for e in json.loads(args.hyperedges))
            except (json.JSONDecodeError, TypeError):
                raise CliError("--hyperedges must be a JSON list of triples") from None
        spec = InstanceSpec(args.family, seed=args.seed, dims=tuple(args.dims), kappa=args.kappa,
                            grid=tuple(args.grid), denominator=args.denominator,
                            hyperedges=hyper, store_costs=args.store_costs)
    _emit(args, save_market(generate(spec)))
    return EXIT_OK


def _cert_report(market, cert):
    verdict = eq.verify(market, cert)
    feasible = validate_allocation(market, cert.allocation)
    return {
        "mode": cert.mode.value,
        "market_clearing": cert.market_clearing,
        "welfare": _q(welfare(market, cert.allocation)) if feasible else None,
        "allocation": allocation_to_list(cert.allocation, market),
        "verified": verdict.ok,
    }, verdict


def _shift_back(original: Market, shift, cert):
    if not original.has_store_costs:
        return cert
    return eq.EquilibriumCertificate(shift.apply(cert.prices), cert.allocation, cert.mode,
                                     cert.market_clearing)


def cmd_solve(args, argv) -> int:
    started = time.perf_counter()
    market = load_market(_read(args.market))
    work, shift = normalize_store_costs(market)
    report = _base_report(argv, "solve")
    report["market"] = _digest(market)
    results = {"requested_mode": args.mode}
    cert = None
    if args.mode == "without-tip":
        cert = eq.construct_without_tip(work, omega_strategy=args.omega)
        route = "construct_without_tip"
    elif args.mode == "with-tip":
        cert = eq.construct_with_tip(work, omega_strategy=args.omega)
        route = "construct_with_tip"
    elif args.mode == "non-clearing":
        cert = eq.best_single_trade_equilibrium(work)
        route = "best_single_trade_equilibrium"
    elif detect_cost_structure(work).kind is not StructureKind.UNSTRUCTURED:
        cert = efficient_equilibrium_structured(work)
        route = "efficient_equilibrium_structured"
    else:
        cert = eq.construct_with_tip(work, omega_strategy=args.omega)
        route = "construct_with_tip"
    if args.optimal_eq:
        found = optimal_equilibrium_welfare_bruteforce(work, cap=args.cap)
        if found is not None:
            results["optimal_equilibrium_welfare"] = _q(found[0])
            if args.mode in ("auto", "with-tip"):
                cert, route = found[1], "optimal_equilibrium_welfare_bruteforce"
    results["route"] = route
    if cert is None:
        results["certificate"] = None
        report["results"] = results
        report["violations"] = []
        _finish(args, report, started)
        return EXIT_NONE
    cert = _shift_back(market, shift, cert)
    summary, verdict = _cert_report(market, cert)
    if not verdict.ok:
        raise CliError(f"internal error: certificate fails {verdict.tags()}", EXIT_FAIL)
    results.update(summary)
    if args.output:
        write_atomic(args.output, eq.save_certificate(cert, market))
        results["certificate"] = args.output
    report["results"] = results
    report["violations"] = []
    _finish(args, report, started)
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    started = time.perf_counter()
    market = load_market(_read(args.market))
    cert = eq.load_certificate(_read(args.certificate))
    if args.mode and args.mode != cert.mode.value:
        raise CliError(f"--mode {args.mode} but certificate is {cert.mode.value}")
    report = _base_report(argv, "verify")
    report["market"] = _digest(market)
    summary, verdict = _cert_report(market, cert)
    report["results"] = summary
    report["violations"] = [v.to_dict() for v in verdict.violations]
    _finish(args, report, started)
    return EXIT_OK if verdict.ok else EXIT_FAIL


def cmd_opt(args, argv) -> int:
    started = time.perf_counter()
    market = load_market(_read(args.market))
    structure = detect_cost_structure(market)
    solver = args.solver
    if solver == "auto":
        if structure.kind in (StructureKind.COURIER_STORE, StructureKind.COURIER_BUYER):
            solver = "flow"
        elif structure.kind is StructureKind.SINGLE_MINDED:
            solver = "single-minded"
        else:
            solver = "brute"
    try:
        if solver == "brute":
            value, x = optimal_welfare_bruteforce(market, cap=args.cap)
        elif solver == "flow":
            value, x = optimal_welfare_flow(market, structure)
        else:
            value, x = optimal_welfare_single_minded(market)
    except ValueError as e:
        if isinstance(e, MarketError):
            raise
        raise CliError(str(e)) from None
    report = _base_report(argv, "opt")
    report["market"] = _digest(market)
    report["results"] = {"solver": solver, "optimal_welfare": _q(value),
                         "allocation": allocation_to_list(x, market)}
    report["violations"] = []
    _finish(args, report, started)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tipeq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, output_help):
        p.add_argument("-o", "--output", help=output_help)
        p.add_argument("--format", choices=("table", "json"), default="table")
        p.add_argument("--report", help="also write the JSON report to this path")

    g = sub.add_parser("generate", help="write a market instance")
    g.add_argument("--spec", help="instance spec JSON file")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dims", type=int, nargs=3, default=(3, 3, 3), metavar=("M", "N", "L"))
    g.add_argument("--kappa", help="fig3 constant, a rational > 2")
    g.add_argument("--grid", type=int, nargs=2, default=(0, 20), metavar=("LO", "HI"))
    g.add_argument("--denominator", type=int, default=1)
    g.add_argument("--store-costs", action="store_true")
    g.add_argument("--hyperedges", help="from-3dm: JSON list of [buyer, store, courier]")
    g.add_argument("-o", "--output", help="market file (default stdout)")
    g.set_defaults(func=cmd_generate)

    cap_help = f"brute-force size cap (default ${CAP_ENV} or 6)"
    s = sub.add_parser("solve", help="construct an equilibrium certificate")
    s.add_argument("market")
    s.add_argument("--mode", choices=("auto", "with-tip", "without-tip", "non-clearing"),
                   default="auto")
    s.add_argument("--optimal-eq", action="store_true",
                   help="also search exhaustively for the best equilibrium welfare")
    s.add_argument("--omega", choices=("greedy", "exhaustive"), default="greedy")
    s.add_argument("--cap", type=int, default=None, help=cap_help)
    common(s, "certificate file")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check a certificate against a market")
    v.add_argument("market")
    v.add_argument("certificate")
    v.add_argument("--mode", choices=("with-tip", "without-tip"))
    v.add_argument("--format", choices=("table", "json"), default="table")
    v.add_argument("--report")
    v.set_defaults(func=cmd_verify)

    o = sub.add_parser("opt", help="compute the optimal welfare")
    o.add_argument("market")
    o.add_argument("--solver", choices=("auto", "brute", "flow", "single-minded"),
                   default="auto")
    o.add_argument("--cap", type=int, default=None, help=cap_help)
    o.add_argument("--format", choices=("table", "json"), default="table")
    o.add_argument("--report")
    o.set_defaults(func=cmd_opt)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    try:
        if getattr(args, "cap", None) is None and hasattr(args, "cap"):
            args.cap = brute_cap()
        return args.func(args, argv)
    except CliError as e:
        print(f"tipeq: {e}", file=sys.stderr)
        return e.code
    except CapExceededError as e:
        print(f"tipeq: {e}", file=sys.stderr)
        return EXIT_CAP
    except MarketError as e:
        print(f"tipeq: input error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
