"""``duelbench`` command line: gen-env, run, aggregate, bound, validate-env.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime failure.
Diagnostics go to stderr; data files are written atomically.
"""

from __future__ import annotations

import argparse
import sys
import time
from collections import Counter
from dataclasses import fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import harness
from .core import EnvironmentSpec, RunConfig
from .environments import (
    build_environment,
    diagnose,
    format_matrix,
    generate_cycle,
    generate_utility,
    load_matrix,
    save_matrix,
)
from .errors import DuelBenchError, ReplicateError

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(message)


def parse_number(text: str) -> float:
    """Plain decimal, or ``base^exp`` (e.g. ``0.8^6``)."""
    text = text.strip()
    if "^" in text:
        base, exp = text.split("^", 1)
        return float(base) ** float(exp)
    return float(text)


# ---------------------------------------------------------------------------
# config files: "key = value" per line, '#' comments

_CONFIG_KEYS = {
    "algorithm": str,
    "alpha": parse_number,
    "batch_size": int,
    "horizon": lambda s: int(parse_number(s)),
    "epsilon": parse_number,
    "c_override": parse_number,
    "base_seed": int,
    "replicates": int,
    "checkpoint_count": int,
    "regret": str,
}
_ENV_KEYS = {
    "env.kind": str,
    "env.path": str,
    "env.suboptimal": int,
    "env.p_condorcet": parse_number,
    "env.p_cycle": parse_number,
    "env.utilities": lambda s: tuple(parse_number(x) for x in s.split(",") if x.strip()),
}


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        conv = _CONFIG_KEYS.get(key) or _ENV_KEYS.get(key)
        if conv is None:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        out[key] = conv(value)
    return out


def config_from_mapping(values: dict, base_dir: Optional[Path] = None) -> RunConfig:
    env_kw = {}
    for key, name in (
        ("env.kind", "kind"),
        ("env.path", "path"),
        ("env.suboptimal", "n_suboptimal"),
        ("env.p_condorcet", "p_condorcet"),
        ("env.p_cycle", "p_cycle"),
        ("env.utilities", "utilities"),
    ):
        if values.get(key) is not None:
            env_kw[name] = values[key]
    if "kind" not in env_kw:
        raise ValueError("configuration needs env.kind (or --env)")
    if env_kw.get("path") and base_dir is not None and not Path(env_kw["path"]).is_absolute():
        env_kw["path"] = str(base_dir / env_kw["path"])
    kw = {k: values[k] for k in _CONFIG_KEYS if values.get(k) is not None}
    return RunConfig(env=EnvironmentSpec(**env_kw), **kw)


def config_to_text(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        if f.name == "env":
            continue
        v = getattr(cfg, f.name)
        if v is not None:
            lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
    env = cfg.env
    lines.append(f"env.kind = {env.kind}")
    if env.path is not None:
        lines.append(f"env.path = {env.path}")
    if env.n_suboptimal is not None:
        lines.append(f"env.suboptimal = {env.n_suboptimal}")
    if env.p_condorcet is not None:
        lines.append(f"env.p_condorcet = {env.p_condorcet!r}")
    if env.p_cycle is not None:
        lines.append(f"env.p_cycle = {env.p_cycle!r}")
    if env.utilities is not None:
        lines.append("env.utilities = " + ",".join(repr(u) for u in env.utilities))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--seed", type=int, dest="base_seed")
    p.add_argument("--replicates", type=int)
    p.add_argument("--horizon", type=lambda s: int(parse_number(s)))
    p.add_argument("--alpha", type=parse_number)
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epsilon", type=parse_number)
    p.add_argument("--c-override", type=parse_number, dest="c_override")
    p.add_argument("--algorithm", choices=list(harness.RUNNERS))
    p.add_argument("--threads", type=int)
    p.add_argument("--checkpoints", type=int, dest="checkpoint_count")
    p.add_argument("--regret", choices=["auto", "condorcet", "copeland"])
    p.add_argument("--env", type=Path, help="preference-matrix file (sets env.kind = file)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="duelbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-env", help="write a synthetic preference matrix")
    g.add_argument("--kind", required=True, choices=["cycle", "utility"])
    g.add_argument("--suboptimal", type=int)
    g.add_argument("--p-condorcet", type=parse_number)
    g.add_argument("--p-cycle", type=parse_number)
    g.add_argument("--utilities", type=str)
    g.add_argument("--out", type=Path)

    r = sub.add_parser("run", help="execute seeded replicates and write a results CSV")
    _common(r)

    a = sub.add_parser("aggregate", help="mean and standard error per checkpoint")
    a.add_argument("inputs", nargs="*", type=Path)
    a.add_argument("--out", type=Path)

    b = sub.add_parser("bound", help="audit final regrets against the high-probability bound")
    _common(b)
    b.add_argument("--results", type=Path, required=True)

    v = sub.add_parser("validate-env", help="print diagnostics for a preference-matrix file")
    v.add_argument("path", type=Path)
    return parser


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_config(args) -> RunConfig:
    values: dict = {}
    base_dir = None
    if args.config is not None:
        if not args.config.exists():
            raise UsageError(f"config file not found: {args.config}")
        values.update(parse_config_text(args.config.read_text()))
        base_dir = args.config.parent
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if args.env is not None:
        if not args.env.exists():
            raise UsageError(f"environment file not found: {args.env}")
        for k in list(values):
            if k.startswith("env."):
                del values[k]
        values["env.kind"] = "file"
        values["env.path"] = str(args.env)
        base_dir = None
    if "env.kind" not in values:
        raise UsageError("no environment given: use --env or env.kind in --config")
    return config_from_mapping(values, base_dir)


def _describe(p, diag) -> list[str]:
    lines = [f"rankers: {p.k}"]
    lines.append(f"condorcet winner: {diag.condorcet if diag.condorcet is not None else 'none'}")
    winners = diag.copeland_winners
    lines.append(f"copeland winners: {','.join(map(str, winners))} (score {diag.copeland_value:.6g})")
    b = diag.borda_scores
    lines.append(f"borda max: {b.max():.12g} (ranker {int(np.argmax(b))})")
    lines.append(f"borda min: {b.min():.12g} (ranker {int(np.argmin(b))})")
    lines.append(f"delta_min: {diag.delta_min:.12g}" if diag.delta_min is not None else "delta_min: undefined")
    lines.append(f"uninformative rankers: {diag.uninformative_count}")
    lines.append(f"assumption 1 (distinguishability): {'holds' if diag.assumption1_holds else 'violated'}")
    lines.append(f"assumption 2 (<= 1/3 uninformative): {'holds' if diag.assumption2_holds else 'violated'}")
    return lines


def cmd_gen_env(args) -> int:
    if args.kind == "cycle":
        missing = [f for f in ("suboptimal", "p_condorcet", "p_cycle") if getattr(args, f) is None]
        if missing:
            raise UsageError("cycle environments need " + ", ".join("--" + m.replace("_", "-") for m in missing))
        p = generate_cycle(args.suboptimal, args.p_condorcet, args.p_cycle)
    else:
        if args.utilities is None:
            raise UsageError("utility environments need --utilities")
        try:
            utilities = [parse_number(x) for x in args.utilities.split(",") if x.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --utilities: {exc}") from None
        p = generate_utility(utilities)
    if args.out is None:
        sys.stdout.write(format_matrix(p))
    else:
        save_matrix(p, args.out)
    for line in _describe(p, diagnose(p)):
        _err(line)
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    if args.out is None:
        raise UsageError("run needs --out")
    env = build_environment(cfg.env)
    t0 = time.perf_counter()
    try:
        ledgers = harness.run_replicates(cfg, env, threads=args.threads)
    except ReplicateError as exc:
        _err(f"error: {exc}")
        return EXIT_RUNTIME
    dt = time.perf_counter() - t0
    harness.write_results_csv(ledgers, args.out)
    tally = Counter("none" if lg.final_winner is None else lg.final_winner for lg in ledgers)
    _err(f"{cfg.algorithm}: {cfg.replicates} replicates x {cfg.horizon} steps in {dt:.2f}s")
    _err(f"steps/second: {cfg.horizon * cfg.replicates / dt:.4g}" if dt > 0 else "steps/second: inf")
    _err("final winner tally: " + ", ".join(f"{k}: {v}" for k, v in sorted(tally.items(), key=str)))
    return EXIT_OK


def cmd_aggregate(args) -> int:
    if not args.inputs:
        raise UsageError("aggregate needs at least one results CSV")
    ledgers = []
    for path in args.inputs:
        if not path.exists():
            raise UsageError(f"results file not found: {path}")
        ledgers.extend(harness.read_results_csv(path))
    series = harness.aggregate(ledgers)
    if args.out is None:
        sys.stdout.write(harness.aggregate_csv_text(series))
    else:
        harness.write_aggregate_csv(series, args.out)
    _err(f"aggregated {series.n} replicates; final mean {series.final_mean:.6g} +/- {series.final_stderr:.3g}")
    return EXIT_OK


def cmd_bound(args) -> int:
    if args.env is None and args.config is None:
        raise UsageError("bound needs --env (and optionally --config)")
    cfg = _resolve_config(args)
    if not args.results.exists():
        raise UsageError(f"results file not found: {args.results}")
    env = build_environment(cfg.env)
    ledgers = harness.read_results_csv(args.results)
    report = harness.bound_audit(cfg, ledgers, diagnose(env))
    if not report.applicable:
        _err(f"warning: {report.message}")
        return EXIT_OK
    print(f"bound: {report.bound:.12g}")
    print(f"expected-regret bound: {report.expected_bound:.12g}")
    for r, (lg, ok) in enumerate(zip(ledgers, report.below)):
        print(f"replicate {r}: final regret {lg.final_regret:.12g} {'pass' if ok else 'FAIL'}")
    print(f"violations: {report.violations} (allowed {report.allowed})")
    print(f"verdict: {'PASS' if report.passed else 'FAIL'}")
    return EXIT_OK


def cmd_validate_env(args) -> int:
    if not args.path.exists():
        raise UsageError(f"matrix file not found: {args.path}")
    p = load_matrix(args.path)
    for line in _describe(p, diagnose(p)):
        print(line)
    return EXIT_OK


COMMANDS = {
    "gen-env": cmd_gen_env,
    "run": cmd_run,
    "aggregate": cmd_aggregate,
    "bound": cmd_bound,
    "validate-env": cmd_validate_env,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        _err(f"usage error: {exc}")
        return EXIT_USAGE
    except (DuelBenchError, ValueError) as exc:
        _err(f"invalid input: {exc}")
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        _err(f"runtime failure: {exc!r}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
