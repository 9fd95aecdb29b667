"""Command-line interface.

    polis gen-map   --seed 1 --firms 100 --markets 5 --grid 100 --out eco.json
    polis simulate  --map eco.json --rate 0,0,0,0,0 --fixed 0,0,0,0,0 --out run/
    polis estimate  --map eco.json --n-sim 50 --out est.json
    polis optimize  sa --map eco.json --n-sim 50 --executions 30 --out sa/
    polis stats     sls/best_values.txt sa/best_values.txt

Every tunable resolves as: command-line flag, else ``--config`` JSON entry
(keys as in ``--show-defaults``), else the built-in default. Exit status is
0 on success, 2 for usage or validation errors and 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from polis.defaults import DEFAULTS
from polis.economy import EconomyMap, MarketParams, TaxPolicy, generate_map
from polis.errors import InvalidConfiguration, OptimizerError
from polis.estimator import PolicyEvaluator, estimate_expected_objective, thread_count
from polis.evolution import SimConfig, run_simulation, write_trace_csv
from polis.metaheuristics import (
    AnnealerConfig,
    NeighborhoodSpec,
    SearchConfig,
    simulated_annealing,
    stochastic_local_search,
    write_history_csv,
)
from polis.stats import format_summary_table, one_sided_test, read_values, summarize, summary_block

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _resolve(args, key):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in args.config_values:
        return args.config_values[key]
    return DEFAULTS[key]


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _add_common(p: argparse.ArgumentParser, out_help: str) -> None:
    p.add_argument("--seed", type=int, help="root random seed")
    p.add_argument("--out", "-o", type=Path, help=out_help)
    p.add_argument("--config", type=Path, help="JSON file of parameter overrides")


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--map", dest="map_path", type=Path, required=True, help="economy map JSON")
    p.add_argument("--steps", type=int)
    p.add_argument("--warmup", type=int)
    p.add_argument("--neighbors", type=int)
    p.add_argument("--mimic-prob", dest="mimic_prob", type=float)
    p.add_argument("--mutate-prob", dest="mutate_prob", type=float)
    p.add_argument("--intercept", type=float)
    p.add_argument("--slope", type=float)
    p.add_argument("--transport", type=float)


def _add_policy_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", type=Path, help='JSON {"rate": [...], "fixed": [...]}')
    p.add_argument("--rate", type=_floats, help="comma-separated per-market rates")
    p.add_argument("--fixed", type=_floats, help="comma-separated per-market fixed amounts")


def _add_neighborhood_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rate-radius", dest="rate_radius", type=float)
    p.add_argument("--fixed-radius", dest="fixed_radius", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polis", description="Spatial market economy and tax-policy search.")
    parser.add_argument("--show-defaults", action="store_true", help="print the default parameter table")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-map", help="generate a random economy map")
    _add_common(p, "output JSON path")
    p.add_argument("--firms", type=int)
    p.add_argument("--markets", type=int)
    p.add_argument("--grid", type=int)

    p = sub.add_parser("simulate", help="run one simulation and export its trace")
    _add_common(p, "output directory")
    _add_sim_args(p)
    _add_policy_args(p)
    p.add_argument("--plot-data", action="store_true", help="also write the mean-profit series")

    p = sub.add_parser("estimate", help="Monte-Carlo estimate of a policy's objective")
    _add_common(p, "output JSON path (stdout when omitted)")
    _add_sim_args(p)
    _add_policy_args(p)
    p.add_argument("--n-sim", dest="n_sim", type=int)
    p.add_argument("--confidence", type=float)
    p.add_argument("--parallel", action="store_true", help="run replicates on POLIS_THREADS threads")

    p = sub.add_parser("optimize", help="search tax policies with SA or local search")
    p.add_argument("algorithm", choices=["sa", "sls"])
    _add_common(p, "output directory")
    _add_sim_args(p)
    _add_policy_args(p)
    _add_neighborhood_args(p)
    p.add_argument("--n-sim", dest="n_sim", type=int)
    p.add_argument("--executions", type=int, help="independent seeded executions")
    p.add_argument("--t0", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--t-final", dest="t_final", type=float)
    p.add_argument("--inner-iters", dest="inner_iters", type=int)
    p.add_argument("--max-evals", dest="max_evals", type=int, help="SA evaluation cap; 0 disables it")
    p.add_argument("--iterations", type=int, help="local-search iterations")
    p.add_argument("--parallel", action="store_true", help="run executions on POLIS_THREADS threads")

    p = sub.add_parser("stats", help="summaries, intervals and the one-sided test")
    p.add_argument("files", type=Path, nargs="+", help="one or two value files")
    p.add_argument("--column", help="CSV column name or index (default: one value per line)")
    p.add_argument("--alpha", type=float, default=0.001, help="significance level for the test")
    p.add_argument("--json", action="store_true", help="emit JSON instead of a text table")
    _add_common(p, "also write the JSON report here")
    return parser


def _economy_and_config(args) -> tuple[EconomyMap, SimConfig]:
    economy = EconomyMap.load(args.map_path)
    params = MarketParams(_resolve(args, "intercept"), _resolve(args, "slope"), _resolve(args, "transport"))
    config = SimConfig(
        steps=_resolve(args, "steps"),
        warmup=_resolve(args, "warmup"),
        neighbor_count=_resolve(args, "neighbors"),
        mimic_prob=_resolve(args, "mimic_prob"),
        mutate_prob=_resolve(args, "mutate_prob"),
        market_params=params,
        seed=_resolve(args, "seed"),
    )
    config.check_against(economy)
    return economy, config


def _policy(args, n_markets: int) -> TaxPolicy:
    if args.policy is not None:
        policy = TaxPolicy.from_dict(json.loads(args.policy.read_text()))
    elif args.rate is not None or args.fixed is not None:
        rate = args.rate if args.rate is not None else [0.0] * n_markets
        fixed = args.fixed if args.fixed is not None else [0.0] * n_markets
        policy = TaxPolicy(tuple(rate), tuple(fixed))
    elif "policy" in args.config_values:
        policy = TaxPolicy.from_dict(args.config_values["policy"])
    else:
        policy = TaxPolicy.zeros(n_markets)
    if policy.n_markets != n_markets:
        raise InvalidConfiguration(f"policy has {policy.n_markets} markets, map has {n_markets}")
    spec = _neighborhood(args)
    if not spec.contains(policy):
        raise InvalidConfiguration(
            f"policy outside the feasible box rate {spec.rate_bounds}, fixed {spec.fixed_bounds}"
        )
    return policy


def _neighborhood(args) -> NeighborhoodSpec:
    return NeighborhoodSpec(
        rate_radius=_resolve(args, "rate_radius"),
        fixed_radius=_resolve(args, "fixed_radius"),
        rate_bounds=(_resolve(args, "rate_min"), _resolve(args, "rate_max")),
        fixed_bounds=(_resolve(args, "fixed_min"), _resolve(args, "fixed_max")),
    )


def cmd_gen_map(args) -> int:
    economy = generate_map(_resolve(args, "seed"), _resolve(args, "firms"), _resolve(args, "markets"),
                           _resolve(args, "grid"))
    out = args.out or Path("economy.json")
    economy.save(out)
    print(out)
    return 0


def cmd_simulate(args) -> int:
    economy, config = _economy_and_config(args)
    policy = _policy(args, economy.n_markets)
    result = run_simulation(economy, None, policy, config)
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    write_trace_csv(result, out / "trace.csv")
    _write_json(out / "summary.json", {
        "objective": result.objective,
        "steps": config.steps,
        "warmup": config.warmup,
        "seed": config.seed,
        "policy": policy.to_dict(),
    })
    if args.plot_data:
        with open(out / "mean_profit.csv", "w") as fh:
            fh.write("t,mean_profit\n")
            for t, v in enumerate(result.mean_profit):
                fh.write(f"{t},{float(v)!r}\n")
    print(json.dumps({"objective": result.objective}))
    return 0


def cmd_estimate(args) -> int:
    economy, config = _economy_and_config(args)
    policy = _policy(args, economy.n_markets)
    n_sim = _resolve(args, "n_sim")
    if n_sim < 1:
        raise InvalidConfiguration("--n-sim must be >= 1")
    est = estimate_expected_objective(economy, None, policy, config, n_sim, config.seed,
                                      confidence=_resolve(args, "confidence"), parallel=args.parallel)
    text = est.to_json()
    if args.out:
        args.out.write_text(text + "\n")
    print(text)
    return 0


def _run_one(args, economy, config, initial, k):
    seed = _resolve(args, "seed")
    evaluator = PolicyEvaluator(economy, config, _resolve(args, "n_sim"), root_seed=(seed, k))
    rng = np.random.default_rng([seed, k])
    if args.algorithm == "sa":
        max_evals = _resolve(args, "max_evals")
        cfg = AnnealerConfig(
            t0=_resolve(args, "t0"),
            alpha=_resolve(args, "alpha"),
            t_final=_resolve(args, "t_final"),
            inner_iters=_resolve(args, "inner_iters"),
            max_evaluations=max_evals or None,
            neighborhood=_neighborhood(args),
        )
        return simulated_annealing(evaluator, initial, cfg, rng)
    cfg = SearchConfig(iterations=_resolve(args, "iterations"), neighborhood=_neighborhood(args))
    return stochastic_local_search(evaluator, initial, cfg, rng)


def cmd_optimize(args) -> int:
    economy, config = _economy_and_config(args)
    initial = _policy(args, economy.n_markets)
    if _resolve(args, "n_sim") < 1:
        raise InvalidConfiguration("--n-sim must be >= 1")
    executions = _resolve(args, "executions")
    if executions < 1:
        raise InvalidConfiguration("--executions must be >= 1")
    out = args.out or Path(".")
    out.mkdir(parents=True, exist_ok=True)

    def target(k):
        return out if executions == 1 else out / f"exec_{k:03d}"

    def work(k):
        try:
            run = _run_one(args, economy, config, initial, k)
        except OptimizerError as exc:
            if exc.partial is not None:
                target(k).mkdir(parents=True, exist_ok=True)
                write_history_csv(exc.partial, target(k) / "history.csv")
            raise
        target(k).mkdir(parents=True, exist_ok=True)
        write_history_csv(run, target(k) / "history.csv")
        (target(k) / "best.json").write_text(run.to_json() + "\n")
        return run

    if args.parallel and executions > 1:
        with ThreadPoolExecutor(max_workers=min(thread_count(), executions)) as pool:
            runs = list(pool.map(work, range(executions)))
    else:
        runs = [work(k) for k in range(executions)]
    (out / "best_values.txt").write_text("".join(f"{r.best_value!r}\n" for r in runs))
    print(json.dumps({"algorithm": args.algorithm, "executions": executions,
                      "best_values": [r.best_value for r in runs]}))
    return 0


def cmd_stats(args) -> int:
    if len(args.files) > 2:
        raise UsageError("stats takes one or two value files")
    column = int(args.column) if args.column is not None and args.column.isdigit() else args.column
    names = [p.stem for p in args.files]
    if len(set(names)) < len(names):
        names = [f"{i + 1}:{n}" for i, n in enumerate(names)]
    samples = {name: read_values(path, column) for name, path in zip(names, args.files)}
    blocks = {name: summary_block(v) for name, v in samples.items()}
    report = {"samples": blocks}
    if len(blocks) == 2:
        (name_a, a), (name_b, b) = samples.items()
        z, p = one_sided_test(summarize(a), summarize(b))
        report["test"] = {
            "null": f"mean({name_a}) <= mean({name_b})",
            "alternative": f"mean({name_a}) > mean({name_b})",
            "z": z,
            "p": p,
            "alpha": args.alpha,
            "reject_null": p < args.alpha,
        }
    if args.out:
        _write_json(args.out, report)
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(format_summary_table(blocks))
        if "test" in report:
            t = report["test"]
            verdict = "reject" if t["reject_null"] else "do not reject"
            print(f"\n{t['alternative']}: z = {t['z']:.4f}, p = {t['p']:.4g} -> {verdict} at alpha = {t['alpha']}")
    return 0


COMMANDS = {
    "gen-map": cmd_gen_map,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "optimize": cmd_optimize,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.show_defaults:
        print(json.dumps(DEFAULTS, indent=2))
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    args.config_values = {}
    try:
        if getattr(args, "config", None) is not None:
            args.config_values = json.loads(args.config.read_text())
            unknown = set(args.config_values) - set(DEFAULTS) - {"policy"}
            if unknown:
                raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return COMMANDS[args.command](args)
    except (UsageError, InvalidConfiguration, ValueError, json.JSONDecodeError) as exc:
        print(f"polis {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, OptimizerError) as exc:
        print(f"polis {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
