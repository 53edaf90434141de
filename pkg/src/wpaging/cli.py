"""Command-line entry point: ``wpaging <command> ...``.

Exit status is 0 on success, 2 when an experiment finds a bound violation
and 1 for usage or runtime errors.
"""

from __future__ import annotations

import argparse
import sys

from . import adversaries as adv
from .algorithms import ALGORITHM_NAMES, run_algorithm
from .core import format_weight, read_trace, read_weights, unit_weights, write_trace, write_weights
from .harness import ConfigError, ExperimentConfig, run_experiment, summarize
from .metrics import l1, led_value, lpd
from .offline import SizeLimitError, opt_dp, opt_plus1_dp, opt_plus1_lp
from .predictions import PredictionStream, derive_perfect_prp

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _weights(path, sequences):
    if path:
        return read_weights(path)
    return unit_weights(set().union(*map(set, sequences)))


def cmd_metrics(args) -> int:
    B, A = read_trace(args.input), read_trace(args.pred)
    w = _weights(args.weights, (A, B))
    for name, value in (("l1", l1(A, B, w)), ("lpd", lpd(A, B, w)), ("led", led_value(A, B, w)),
                        ("led_constrained", led_value(A, B, w, constrained=True))):
        print(f"{name} {format_weight(value)}")
    return EXIT_OK


def cmd_opt(args) -> int:
    B = read_trace(args.input)
    w = _weights(args.weights, (B,))
    if args.lp:
        value = opt_plus1_lp(B, w, args.k, exact=not args.float)
        print(value if args.float else format_weight(value))
        return EXIT_OK
    if args.plus1:
        sol = opt_plus1_dp(B, w, args.k, mode=args.charging)
    else:
        sol = opt_dp(B, w, args.k, args.charging)
    print(format_weight(sol.cost))
    if args.schedule:
        for t, (p, act) in enumerate(zip(B, sol.schedule), 1):
            print(t, p, _describe(act.evict, act.fetch, act.bypass))
    return EXIT_OK


def _describe(evicted, fetched, bypass) -> str:
    parts = []
    if evicted:
        parts.append("evict " + ",".join(map(str, evicted)))
    if fetched:
        parts.append("fetch " + ",".join(map(str, fetched)))
    if bypass:
        parts.append("bypass")
    return " ".join(parts) or "hit"


def cmd_simulate(args) -> int:
    B = read_trace(args.input)
    A = read_trace(args.pred) if args.pred else None
    if A is None and args.algo in ("static", "idle"):
        A = list(B)  # perfect predictions by default
    w = _weights(args.weights, (B, A or []))
    preds = PredictionStream(A) if A is not None else None
    _, ledger = run_algorithm(args.algo, B, preds, w, args.k, args.charging)
    print(format_weight(ledger.total))
    if args.trace:
        for rec in ledger.steps:
            cache = " ".join(map(str, sorted(rec.cache)))
            print(rec.time, rec.page, _describe(rec.evicted, rec.fetched, rec.bypass), f"[{cache}]")
    return EXIT_OK


def cmd_adversary(args) -> int:
    if args.kind == "sstring":
        seq = adv.s_string(args.k, args.c, args.repeat)
        weights = adv.power_weights(args.k, args.c)
        prp = list(derive_perfect_prp(seq).next_times)
    else:
        if args.kind == "det":
            from .algorithms import make_algorithm
            res = adv.det_prp_adversary(make_algorithm(args.algo), args.k, args.c, args.blocks)
            stream = res.stream
        else:
            stream = adv.rand_prp_generator(args.k, args.c, args.blocks, args.seed)
        weights = stream.weights()
        if args.collapsed:
            seq = stream.collapsed()
            prp = list(derive_perfect_prp(seq).next_times)
        else:
            seq = stream.expand(args.max_length)
            prp = stream.prp(args.max_length)
        print(f"blocks {len(stream.blocks)} regular {stream.regular_count()} "
              f"irregular {stream.irregular_count()} length {stream.length}")
    write_trace(args.out, seq)
    if args.pred_out:
        write_trace(args.pred_out, prp)
    if args.weights_out:
        write_weights(args.weights_out, weights)
    print(f"wrote {len(seq)} requests to {args.out}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.out:
        cfg.out = args.out
    if args.jobs:
        cfg.jobs = args.jobs
    rows, violations = run_experiment(cfg)
    for algo, s in summarize(rows).items():
        worst = "-" if s["max_ratio"] is None else f"{float(s['max_ratio']):.6g}"
        print(f"{algo}: rows={s['rows']} max_ratio={worst} violations={s['violations']}")
    if violations:
        for v in violations:
            print(f"VIOLATION {v.row.instance_id} {v.row.algo}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wpaging", description="Weighted paging with predictions: simulators and checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("metrics", help="prediction error measures between two sequences")
    m.add_argument("--input", required=True, help="actual request sequence B")
    m.add_argument("--pred", required=True, help="predicted sequence A")
    m.add_argument("--weights", help="page weight file (default: unit weights)")
    m.set_defaults(func=cmd_metrics)

    o = sub.add_parser("opt", help="exact offline optimum")
    o.add_argument("--input", required=True)
    o.add_argument("--weights")
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--charging", choices=("fetch", "evict"), default="fetch")
    o.add_argument("--plus1", action="store_true", help="one extra memoryless slot")
    o.add_argument("--lp", action="store_true", help="LP relaxation of the memoryless-slot optimum")
    o.add_argument("--float", action="store_true", help="solve the LP in floating point")
    o.add_argument("--schedule", action="store_true", help="print the optimal schedule")
    o.set_defaults(func=cmd_opt)

    s = sub.add_parser("simulate", help="run an online algorithm")
    s.add_argument("--algo", required=True, help="one of " + ", ".join(ALGORITHM_NAMES))
    s.add_argument("--input", required=True)
    s.add_argument("--pred", help="predicted sequence (default: perfect predictions)")
    s.add_argument("--weights")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--charging", choices=("fetch", "evict"), default="fetch")
    s.add_argument("--trace", action="store_true", help="print every step")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("adversary", help="generate lower-bound inputs")
    a.add_argument("--kind", choices=("det", "rand", "sstring"), required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--c", type=int, default=2)
    a.add_argument("--blocks", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--algo", default="lru", help="policy the deterministic adversary plays against")
    a.add_argument("--repeat", type=int, default=1, help="copies of the S-string")
    a.add_argument("--collapsed", action="store_true", help="one request per run of equal pages")
    a.add_argument("--max-length", type=int, default=1_000_000)
    a.add_argument("--out", required=True)
    a.add_argument("--pred-out", help="per-request predicted next times")
    a.add_argument("--weights-out")
    a.set_defaults(func=cmd_adversary)

    e = sub.add_parser("experiment", help="run a configured experiment grid")
    e.add_argument("--config", required=True, help="YAML experiment description")
    e.add_argument("--out", help="output directory (overrides the config)")
    e.add_argument("--jobs", type=int, help="worker processes")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, ConfigError, SizeLimitError) as exc:
        print(f"wpaging: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
