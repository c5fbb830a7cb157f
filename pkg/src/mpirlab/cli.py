"""Command-line surface: rates, gen, simulate, audit, table, example.

Human-readable output renders rationals both exactly and to six
significant decimal digits; JSON output carries the exact fraction
strings, so the two never diverge in precision.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from .audit import audit_privacy, statistical_value_audit
from .harness import empirical_rate, enumerate_answer_types, rate_report, run_trial
from .ratemath import SchemeParams, compute_ptable, verify_distribution
from .server import generate_store, read_store, write_store


def _decimal(x: Fraction | float) -> str:
    return f"{float(x):.6g}"


def _params_from(args, default_q=3, default_m=None) -> SchemeParams:
    return SchemeParams(num_messages=args.K, num_demands=args.D,
                        subpacket_count=args.L,
                        field_order=getattr(args, "q", None) or default_q,
                        message_len=getattr(args, "m", None) or default_m)


def _report_payload(params, table, report, verdict) -> dict:
    return {
        "params": {"K": params.num_messages, "D": params.num_demands,
                   "L": params.subpacket_count, "N": params.num_servers,
                   "q": params.field_order, "m": params.message_len},
        "ptable": [str(p) for row in table.probs for p in row],
        "rate": str(report.theoretical_rate),
        "capacity_upper": str(report.capacity_upper),
        "capacity_exact": (str(report.capacity_exact)
                           if report.capacity_exact is not None else None),
        "empirical": report.empirical_rate,
        "verdict": verdict,
    }


def _print_rates_text(params, table, report, verdict) -> None:
    print(f"parameters: K={params.num_messages} D={params.num_demands} "
          f"L={params.subpacket_count} N={params.num_servers} "
          f"(q={params.field_order}, m={params.message_len})")
    print("pair probabilities P[i][j] (row i = interference count, "
          "column j = demand row weight):")
    for i, row in enumerate(table.probs):
        print(f"  i={i} | " + "  ".join(str(p) for p in row))
    print("objective f:  " + "  ".join(str(x) for x in table.objective))
    print("normalizer g: " + "  ".join(str(x) for x in table.normalizer))
    print(f"argmax j*: {table.best_index}")
    print(f"rate R: {report.theoretical_rate} (~{_decimal(report.theoretical_rate)})")
    print(f"capacity upper bound: {report.capacity_upper} "
          f"(~{_decimal(report.capacity_upper)})")
    if report.capacity_exact is not None:
        print(f"exact capacity (D divides K): {report.capacity_exact}")
    print(f"expected download: {report.expected_download_units} message units")
    print(f"distribution check: {verdict}")


def _cmd_rates(args) -> int:
    params = _params_from(args)
    table = compute_ptable(params)
    report = rate_report(params, table)
    ok, problems = verify_distribution(table)
    verdict = "ok" if ok else "invalid: " + "; ".join(problems)
    if args.json:
        print(json.dumps(_report_payload(params, table, report, verdict), indent=2))
    else:
        _print_rates_text(params, table, report, verdict)
    return 0 if ok else 1


def _cmd_gen(args) -> int:
    params = _params_from(args, default_q=args.q, default_m=args.m)
    store = generate_store(params, random.Random(args.seed))
    write_store(store, args.out)
    print(f"wrote {args.out}: K={params.num_messages} messages, "
          f"m={params.message_len} symbols over GF({params.field_order}), "
          f"L={params.subpacket_count}")
    return 0


def _cmd_simulate(args) -> int:
    if args.store:
        if args.D is None:
            raise ValueError("--store also needs --D (the demand count is "
                             "protocol state, not part of the store file)")
        store = read_store(args.store, num_demands=args.D)
        params = store.params
    else:
        if None in (args.K, args.D, args.L):
            raise ValueError("simulate needs --store or all of --K/--D/--L")
        params = _params_from(args, default_m=args.m)
        store = generate_store(params, random.Random(f"{args.seed}:store"))
    report = empirical_rate(params, trials=args.trials, seed=args.seed,
                            store=store)
    verdict = "ok" if report.decode_failures == 0 else (
        f"{report.decode_failures} decode failures")
    if args.json:
        table = compute_ptable(params)
        print(json.dumps(_report_payload(params, table, report, verdict), indent=2))
    else:
        print(f"simulated {report.trials} trials (seed {args.seed})")
        print(f"empirical rate: {_decimal(report.empirical_rate)}"
              + (f" +- {_decimal(report.empirical_se)} (1 se)"
                 if report.empirical_se else ""))
        print(f"theoretical rate: {report.theoretical_rate} "
              f"(~{_decimal(report.theoretical_rate)})")
        print(f"expected download: {report.expected_download_units} message units")
        print(f"decode check: {verdict}")
    return 0 if report.decode_failures == 0 else 1


def _cmd_audit(args) -> int:
    params = _params_from(args)
    table = compute_ptable(params)
    report = audit_privacy(params, table)
    print(report.format_text())
    for record in report.records():
        print(json.dumps(record))
    passed = report.passed
    if args.value_level:
        value_report = statistical_value_audit(
            params, trials=args.trials, significance=args.alpha, seed=args.seed)
        print(value_report.format_text())
        passed = passed and value_report.passed
    return 0 if passed else 1


def _cmd_table(args) -> int:
    params = _params_from(args)
    rows = enumerate_answer_types(params)
    nonzero = [r for r in rows if r.probability]
    print(f"answer-set types for K={params.num_messages} D={params.num_demands} "
          f"L={params.subpacket_count}: {len(nonzero)} realizable classes, "
          f"{len(rows) - len(nonzero)} zero-probability classes")
    for row in rows:
        print("  " + row.describe())
    total = sum((r.probability for r in rows), Fraction(0))
    print(f"total probability: {total}")
    return 0


def _cmd_example(args) -> int:
    params = SchemeParams(num_messages=4, num_demands=2, subpacket_count=2,
                          field_order=7, message_len=4)
    table = compute_ptable(params)
    report = rate_report(params, table)
    print("worked example: K=4 messages, D=2 demands, L=2 subpackets, "
          "N=5 servers, GF(7)")
    print("pair probabilities:")
    for i, row in enumerate(table.probs):
        print(f"  i={i} | " + "  ".join(str(p) for p in row))
    print("answer-set types and probabilities:")
    for row in enumerate_answer_types(params):
        print("  " + row.describe())
    print(f"rate: {report.theoretical_rate} = D / expected download "
          f"{report.expected_download_units}")
    print(f"capacity: upper bound {report.capacity_upper}, exact "
          f"{report.capacity_exact} -- all three coincide")
    store = generate_store(params, random.Random(1))
    result = run_trial(store, (1, 3), table, seed=1)
    print(f"round trip with demand {{1, 3}}: decoded "
          f"{'correctly' if result.decoded_ok else 'WRONG'}, downloaded "
          f"{result.downloaded_subpacket_units} of {params.num_servers} shares")
    return 0 if result.decoded_ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpirlab",
        description="multi-message private retrieval: exact tables, protocol "
                    "simulation and privacy audits")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_kdl(p, required=True):
        p.add_argument("--K", type=int, required=required, help="total messages")
        p.add_argument("--D", type=int, required=required, help="demand messages")
        p.add_argument("--L", type=int, required=required, help="subpackets per message")

    p = sub.add_parser("rates", help="print the exact table, rate and bounds")
    add_kdl(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("gen", help="write a random message-store file")
    add_kdl(p)
    p.add_argument("--q", type=int, required=True, help="prime field order")
    p.add_argument("--m", type=int, required=True, help="symbols per message")
    p.add_argument("--seed", default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("simulate", help="measure the empirical rate over trials")
    add_kdl(p, required=False)
    p.add_argument("--q", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--store", help="message-store file (replaces --K/--L/--q/--m)")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("audit", help="run the exact privacy audit")
    add_kdl(p)
    p.add_argument("--value-level", action="store_true",
                   help="also run the sampled value-level homogeneity test")
    p.add_argument("--q", type=int)
    p.add_argument("--trials", type=int, default=100000)
    p.add_argument("--alpha", type=float, default=0.001)
    p.add_argument("--seed", default=0)
    p.set_defaults(func=_cmd_audit)

    p = sub.add_parser("table", help="enumerate answer-set types")
    add_kdl(p)
    p.set_defaults(func=_cmd_table)

    p = sub.add_parser("example", help="run the K=4, D=2, L=2 walkthrough")
    p.set_defaults(func=_cmd_example)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
