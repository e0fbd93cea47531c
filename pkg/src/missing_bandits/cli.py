"""Command line front end.

Subcommands:
  run         simulate one experiment from a TOML config
  sweep       re-run an experiment across a list of values for one key
  bounds      print/save reference bound curves for the configured env
  ingest-pbc  convert a trial CSV into a bootstrap environment config

Exit codes: 0 success, 1 bad input (config, overrides, data files),
2 unexpected internal failure.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from typing import List, Optional

from .config import ConfigError, apply_overrides, build_config, load_raw
from .envs import IngestError, ingest_pbc
from .runner import build_env, run_experiment, theoretical_curves, write_results

SEED_ENV_VAR = "MISSING_BANDITS_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; we reserve 2 for crashes
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="missing-bandits")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--workers", type=int, default=1)

    run_p = sub.add_parser("run")
    common(run_p)

    sweep_p = sub.add_parser("sweep")
    common(sweep_p)
    sweep_p.add_argument("--param", required=True)
    sweep_p.add_argument("--values", required=True)

    bounds_p = sub.add_parser("bounds")
    common(bounds_p)

    pbc_p = sub.add_parser("ingest-pbc")
    pbc_p.add_argument("--csv", required=True)
    pbc_p.add_argument("--out-config")
    pbc_p.add_argument("--seed", type=int)
    pbc_p.add_argument("--quiet", action="store_true")
    return parser


def _env_seed() -> Optional[int]:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


def _load(args):
    raw = load_raw(args.config)
    apply_overrides(raw, args.set)
    fallback = _env_seed()
    cfg = build_config(
        raw,
        seed_override=args.seed,
        seed_fallback=0 if fallback is None else fallback,
        output_override=args.out,
    )
    return raw, cfg


def _cmd_run(args) -> int:
    _, cfg = _load(args)
    curves = run_experiment(cfg, workers=args.workers)
    paths = write_results(curves, cfg.output_dir, cfg)
    if not args.quiet:
        for curve in curves:
            print(f"{cfg.experiment} {curve.policy_name}: final regret "
                  f"{curve.mean[-1]:.3f} +/- {curve.std[-1]:.3f}")
        for path in paths:
            print(f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    base_raw = load_raw(args.config)
    apply_overrides(base_raw, args.set)
    fallback = _env_seed()
    for text in values:
        raw = copy.deepcopy(base_raw)
        apply_overrides(raw, [f"{args.param}={text}"])
        cfg = build_config(
            raw,
            seed_override=args.seed,
            seed_fallback=0 if fallback is None else fallback,
            output_override=args.out,
        )
        cfg.experiment = f"{cfg.experiment}-{args.param.split('.')[-1]}-{text}"
        curves = run_experiment(cfg, workers=args.workers)
        paths = write_results(curves, cfg.output_dir, cfg)
        if not args.quiet:
            for curve in curves:
                print(f"{cfg.experiment} {curve.policy_name}: final regret "
                      f"{curve.mean[-1]:.3f} +/- {curve.std[-1]:.3f}")
            for path in paths:
                print(f"wrote {path}")
    return 0


def _cmd_bounds(args) -> int:
    _, cfg = _load(args)
    env = build_env(cfg.env)
    table = theoretical_curves(cfg, env)
    names = list(table["columns"])
    header = ",".join(["t"] + names)
    lines = [header]
    for i, t in enumerate(table["times"]):
        row = [str(t)] + [repr(float(table["columns"][c][i])) for c in names]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.out:
        out_path = args.out
        if os.path.isdir(out_path) or out_path.endswith(os.sep):
            os.makedirs(out_path, exist_ok=True)
            out_path = os.path.join(out_path, f"{cfg.experiment}-bounds.csv")
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if not args.quiet:
            print(f"wrote {out_path}")
    elif not args.quiet:
        sys.stdout.write(text)
    return 0


def _cmd_ingest_pbc(args) -> int:
    from .core import RngStream

    seed = args.seed
    if seed is None:
        env_seed = _env_seed()
        seed = 0 if env_seed is None else env_seed
    env = ingest_pbc(args.csv, None, RngStream(seed))
    if not args.quiet:
        print(f"arms: {env.n}, mediator levels: {env.K}")
        for a in range(env.n):
            sizes = [len(pool) for pool in env.pools[a]]
            total = sum(sizes)
            freqs = " ".join(f"{s / total:.3f}" for s in sizes)
            print(f"arm {a}: {total} rows, mediator freqs [{freqs}], "
                  f"mean outcome {env.true_mean(a):.4f}")
    if args.out_config:
        lines = [
            "[env]",
            'kind = "bootstrap"',
            f'csv = "{os.path.abspath(args.csv)}"',
            f"seed = {seed}",
            "",
            "[[policy]]",
            'kind = "MarUcbUnknownP"',
            "",
            "[run]",
            "T = 10000",
            "replications = 5",
            f"base_seed = {seed}",
        ]
        with open(args.out_config, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
        if not args.quiet:
            print(f"wrote {args.out_config}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "bounds": _cmd_bounds,
    "ingest-pbc": _cmd_ingest_pbc,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (UsageError, ConfigError, IngestError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - defensive
        print(f"internal error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
