"""Command-line entry point: ``offlab <subcommand>``.

Exit codes: 0 success, 1 invalid config or input, 2 some cells failed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import harness
from .data import OfflineDataset, behavior_from_policy, build_empirical_model
from .data import concentrability, coverage_constant, sample_dataset
from .envs.critical import classify_critical_states, zeta_cover_deficit
from .mdp import InvalidInputError, solve_optimal

EXIT_OK, EXIT_CONFIG, EXIT_CELLS = 0, 1, 2


def _print_json(doc) -> None:
    print(json.dumps(harness._json_safe(doc), indent=2))


def _finish_sweep(result: harness.SweepResult, out) -> int:
    print(f"{len(result.rows)} rows, {result.num_errors} errors"
          + (f", written to {out}" if out else ""))
    for s in result.summary:
        nr = s["normalized_return_mean"]
        print(f"  {s['env']:<24} {s['learner']:<14} {s['data_recipe']:<24} N={s['N']:<6} "
              f"gamma={s['gamma']:<6g} "
              + ("errors only" if nr is None else
                 f"norm_return={nr:.4f} +- {s['normalized_return_stderr']:.4f}"))
    return EXIT_CELLS if result.num_errors else EXIT_OK


def cmd_run(args) -> int:
    cfg = harness.ExperimentConfig.load(args.config)
    out = args.out or cfg.out
    if args.seeds is not None:
        cfg = harness.replace(cfg, seeds=args.seeds)
    cfg = harness.replace(cfg, out=out)
    return _finish_sweep(harness.run_sweep(cfg, args.workers), out)


def cmd_preset(args) -> int:
    if args.name not in harness.PRESETS:
        raise InvalidInputError(f"unknown preset {args.name!r}; choose from {harness.PRESETS}")
    out = args.out or str(Path("runs") / args.name)
    cfg = harness.preset(args.name, args.seeds, out)
    if args.base_seed is not None:
        cfg = harness.replace(cfg, base_seed=args.base_seed)
    return _finish_sweep(harness.run_sweep(cfg, args.workers), out)


def cmd_sample(args) -> int:
    mdp, shifted = harness.build_env(args.env, args.gamma)
    _, pi_star = solve_optimal(mdp)
    mu = harness.recipe_behavior(mdp, pi_star, shifted, harness.parse_recipe(args.recipe))
    ds = sample_dataset(mdp, mu, args.n, args.seed)
    ds.meta.update({"env": args.env, "recipe": args.recipe})
    ds.save(args.out)
    print(f"wrote {len(ds)} transitions to {args.out}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    mdp, _ = harness.build_env(args.env, args.gamma)
    try:
        ds = OfflineDataset.load(args.data)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"cannot read dataset {args.data}: {exc}") from None
    model = build_empirical_model(ds, mdp.num_states, mdp.num_actions)
    vb, pi_star = solve_optimal(mdp)
    d_star = behavior_from_policy(mdp, pi_star)
    c_star = concentrability(d_star, model.mu_hat)
    b = coverage_constant(d_star, model.mu_hat, mdp.horizon) if args.b is None else args.b
    report = classify_critical_states(mdp, vb)
    zeta = model.mu_hat >= b
    _print_json({
        "env": args.env, "num_transitions": len(ds), "horizon": mdp.horizon,
        "c_star": c_star, "coverage_b": b,
        "coverage_exceeds_log_h_over_n": b > math.log(mdp.horizon) / len(ds),
        "critical_states": report.critical_set, "p_c": report.p_c,
        "u_b": zeta_cover_deficit(mdp, pi_star, zeta),
    })
    return EXIT_OK


def cmd_bounds(args) -> int:
    try:
        doc = json.loads(Path(args.inputs).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read bound inputs {args.inputs}: {exc}") from None
    items = doc if isinstance(doc, list) else [doc]
    text = harness.rows_to_csv(harness.bound_rows(items))
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_audit(args) -> int:
    try:
        doc = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidInputError(f"cannot read audit config {args.config}: {exc}") from None
    _print_json(harness.pessimism_sweep(doc, args.workers))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="offlab", description="Tabular offline-RL laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a sweep from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--seeds", type=int)
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="run a named experiment preset")
    pr.add_argument("name", help=", ".join(harness.PRESETS))
    pr.add_argument("--seeds", type=int)
    pr.add_argument("--base-seed", type=int)
    pr.add_argument("--out")
    pr.add_argument("--workers", type=int)
    pr.set_defaults(func=cmd_preset)

    s = sub.add_parser("sample", help="sample an i.i.d. dataset to CSV")
    s.add_argument("--env", required=True)
    s.add_argument("--recipe", default="expert")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--gamma", type=float)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sample)

    d = sub.add_parser("diagnose", help="dataset diagnostics against an environment")
    d.add_argument("--env", required=True)
    d.add_argument("--data", required=True)
    d.add_argument("--gamma", type=float)
    d.add_argument("--b", type=float, help="support threshold for U(b); default: coverage b")
    d.set_defaults(func=cmd_diagnose)

    b = sub.add_parser("bounds", help="evaluate bound formulas from a JSON file")
    b.add_argument("--inputs", required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    a = sub.add_parser("audit-pessimism", help="Monte-Carlo audit of V-hat <= V^pi-hat")
    a.add_argument("--config", required=True)
    a.add_argument("--workers", type=int)
    a.set_defaults(func=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvalidInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
