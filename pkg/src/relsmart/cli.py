"""Command-line entry point.

Exit codes: 0 success, 1 a check or invariant failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import construct as cons
from .core import DomainError, RandomSource
from .harness import (
    ConfigError,
    ExperimentConfig,
    ResultTable,
    emit_results,
    run_experiment,
    tester_distribution,
    tester_rates,
)
from .oig import (
    BehaviorSet,
    build_one_inclusion_graph,
    densest_subgraph_density,
    min_max_fractional_orientation,
)
from .oracle import CapExceededError, GameInstance, optimal_fixed_error
from .unitest import SampleTooSmallError, m_test_sample_bound

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _read_json(path: str | None):
    try:
        text = sys.stdin.read() if path in (None, "-") else Path(path).read_text()
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read JSON input: {exc}") from exc


def _write(text: str, path: str | None):
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _report_checks(table: ResultTable) -> int:
    for c in table.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} {c.detail}".rstrip(), file=sys.stderr)
    return EXIT_OK if table.passed else EXIT_FAIL


def cmd_simulate(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    table = run_experiment(cfg)
    _write(emit_results(table, args.format), args.out)
    if args.json:
        emit_results(table, "json", args.json)
    return _report_checks(table)


def cmd_test_uniformity(args) -> int:
    n, xi, delta = args.n, args.xi, args.delta
    if args.trials < 1:
        raise ConfigError("trials must be positive")
    size = args.sample_size or m_test_sample_bound(n, xi / 2 if args.tester == "modified" else xi, delta)
    specs = args.dist or ["uniform"]
    cfg = ExperimentConfig("tester-calibration", args.seed, args.trials, min_trials=1,
                           params={"n": n, "xi": xi, "delta": delta, "sample_size": size})
    table = ResultTable(cfg)
    src = RandomSource(args.seed)
    for i, spec in enumerate(specs):
        if spec.lstrip().startswith("{"):
            spec = {"custom": json.loads(spec)}
        D = tester_distribution(spec, n)
        est = tester_rates(n, xi, delta, size, D, args.trials, src.child(i), args.tester)
        table.add("test-uniformity/accept-rate", f"uniform(n={n})", D.name, size, est)
    _write(emit_results(table, "csv"), args.out)
    return EXIT_OK


def cmd_oig_orient(args) -> int:
    bits = _read_json(args.behaviors)
    if not isinstance(bits, list):
        raise ConfigError("behavior set must be a JSON list of bit-strings")
    g = build_one_inclusion_graph(BehaviorSet.from_bitstrings(bits))
    orient = min_max_fractional_orientation(g)
    density = densest_subgraph_density(g)
    ok = abs(orient.value - density) <= 1e-6
    out = {
        "behaviors": g.behaviors.bitstrings(),
        "value": orient.value,
        "out_degrees": orient.out_degrees().tolist(),
        "densest_subgraph_density": density,
        "duality_check": "ok" if ok else "mismatch",
    }
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_construct(args) -> int:
    src = RandomSource(args.seed)
    thr = args.intersection if args.intersection is not None else args.n ** (1 - args.beta / 2)
    system = cons.sample_set_system(args.universe, args.n, args.k, src.child(0), intersection=thr)
    cls = cons.sample_labelings(system, src.child(1).generator())
    report = cons.verify_set_system(system, thr, args.container_size, args.container_count,
                                    rng=src.child(2).generator())
    out = {
        "seed": args.seed,
        **cls.to_json(),
        "verification": report.to_json(),
    }
    _write(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_FAIL


def cmd_oracle(args) -> int:
    inst = GameInstance.from_json(_read_json(args.instance))
    sol = optimal_fixed_error(inst, cross_check=not args.no_cross_check)
    _write(json.dumps(sol.to_json(), indent=2) + "\n", args.out)
    return EXIT_OK if sol.certified() else EXIT_FAIL


def cmd_audit_certifier(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    if cfg.experiment != "soundness":
        raise ConfigError("audit-certifier expects a soundness config")
    table = run_experiment(cfg)
    _write(emit_results(table, "csv"), args.out)
    report = table.extras["report"]
    text = json.dumps(report, indent=2) + "\n"
    if args.json:
        Path(args.json).write_text(text)
    else:
        print(text, file=sys.stderr)
    return _report_checks(table)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relsmart", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run an experiment config")
    s.add_argument("config")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.add_argument("--out", help="output path (default stdout)")
    s.add_argument("--json", help="also write the JSON report here")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("test-uniformity", help="acceptance rates of the uniformity tester")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--xi", type=float, required=True)
    s.add_argument("--delta", type=float, required=True)
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--dist", action="append",
                   help="uniform | subset-uniform:k | pointmass | offsupport-mixture:f | custom JSON (repeatable)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--sample-size", type=int)
    s.add_argument("--tester", choices=("modified", "standard"), default="modified")
    s.add_argument("--out")
    s.set_defaults(func=cmd_test_uniformity)

    s = sub.add_parser("oig-orient", help="min-max fractional orientation of a behavior set")
    s.add_argument("behaviors", nargs="?", help="JSON file with a list of bit-strings (default stdin)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oig_orient)

    s = sub.add_parser("construct", help="sample and verify a set system with labelings")
    s.add_argument("--universe", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, default=64)
    s.add_argument("--beta", type=float, default=0.5)
    s.add_argument("--intersection", type=float, help="pairwise intersection bound (default n^(1-beta/2))")
    s.add_argument("--container-size", type=int)
    s.add_argument("--container-count", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("oracle", help="solve a tiny learner-vs-adversary game")
    s.add_argument("instance", nargs="?", help="instance JSON file (default stdin)")
    s.add_argument("--no-cross-check", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("audit-certifier", help="statistical soundness audit from a soundness config")
    s.add_argument("config")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--json", help="report JSON path (default stderr)")
    s.set_defaults(func=cmd_audit_certifier)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, CapExceededError, SampleTooSmallError, DomainError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
