"""Command-line interface: design, schedule, simulate, check-cycle, reproduce."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import reproduce
from .config import RunConfig, load_config
from .cycles import Cycle, find_T_factors, is_candidate_contractive, is_T_contractive
from .design import DesignResult, design_cycle
from .errors import ConfigError, InfeasibleDesignError, NCSError, PolicyFormatError
from .plants import validate_assumption1
from .scheduler import SchedulingPolicy, build_policy, parse_policy, round_robin, serialize_policy
from .simulator import (
    classify_gas,
    envelope_check,
    simulate,
    verify_certificates,
    write_trace_csv,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_VIOLATION = 3
EXIT_CONFIG = 4


def _out_dir(args, cfg: RunConfig | None = None) -> Path | None:
    d = args.out or (cfg.output_dir if cfg else None)
    if d is None:
        return None
    p = Path(d)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        (out / name).write_text(text)
        print(f"wrote {out / name}")


def _load_cycle_file(path: str, N: int) -> tuple[Cycle, tuple[int, ...] | None]:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read cycle file {path}: {exc}") from exc
    if isinstance(obj, list):
        obj = {"sets": obj}
    try:
        W = Cycle.from_sets(N, obj["sets"])
        T = tuple(int(t) for t in obj["T"]) if "T" in obj else None
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad cycle file {path}: {exc}") from exc
    return W, T


def _require_assumption(cfg: RunConfig) -> None:
    rep = validate_assumption1(cfg.ncs)
    if not rep.ok:
        bad = "; ".join(f"plant {p.index}: {p.reason}" for p in rep.failures())
        raise ConfigError(f"plants violate the open/closed-loop assumption: {bad}")


def cmd_design(args) -> int:
    cfg = load_config(args.config)
    _require_assumption(cfg)
    W = _load_cycle_file(args.cycle, cfg.ncs.N)[0] if args.cycle else cfg.cycle(args.seed)
    t_max = args.t_max or cfg.T_max
    g = cfg.grid
    print(f"cycle {W} (n={W.n}), grid h_s={g.h_s} h_u={g.h_u} kappa_min={g.kappa_min}"
          f" lmi_tol={g.lmi_tol}, T_max={t_max}, strictness Ξ < -1e-12")
    try:
        res = design_cycle(cfg.ncs, W, g, t_max)
    except InfeasibleDesignError as exc:
        print(f"design failed [{exc.kind}]: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"T-factors {res.T}, period {res.period}")
    for i, (c, x) in enumerate(zip(res.certificates, res.xi), start=1):
        print(f"  plant {i}: λs={c.lambda_s:.6g} λu={c.lambda_u:.6g} μsu={c.mu_su:.6g}"
              f" μus={c.mu_us:.6g}  Ξ={x:.6f}")
    _emit(res.dumps(), _out_dir(args, cfg), "design.json")
    return EXIT_OK


def _load_design(path: str) -> DesignResult:
    try:
        obj = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read design file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PolicyFormatError(f"design file {path} is not valid JSON: {exc}") from exc
    return DesignResult.from_json(obj)


def _round_robin_policy(cfg: RunConfig) -> SchedulingPolicy:
    rr = cfg.raw.get("round_robin")
    if rr is None:
        raise ConfigError("config has no 'round_robin' section")
    return round_robin(cfg.ncs.N, rr["groups"], rr.get("dwell", 1))


def cmd_schedule(args) -> int:
    if args.round_robin:
        if not args.config:
            raise ConfigError("--round-robin needs --config")
        pol = _round_robin_policy(load_config(args.config))
    else:
        if not args.design:
            raise ConfigError("schedule needs a design file (or --round-robin with --config)")
        res = _load_design(args.design)
        pol = build_policy(res.cycle, res.T)
    _emit(serialize_policy(pol), _out_dir(args), "policy.txt")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.round_robin:
        pol = _round_robin_policy(cfg)
    elif args.policy:
        try:
            pol = parse_policy(Path(args.policy).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read policy {args.policy}: {exc}") from exc
    else:
        raise ConfigError("simulate needs --policy or --round-robin")
    if pol.N != cfg.ncs.N:
        raise ConfigError(f"policy is for {pol.N} plants, config has {cfg.ncs.N}")
    horizon = cfg.horizon if args.horizon is None else args.horizon
    x0 = cfg.initial_states(args.seed)
    tr = simulate(cfg.ncs, pol, x0, horizon)
    out = _out_dir(args, cfg)
    if out is not None:
        with open(out / "trace.csv", "w") as fh:
            write_trace_csv(tr, fh)
        print(f"wrote {out / 'trace.csv'} (trial 0 of {tr.trials})")
    status = EXIT_OK
    window = pol.period if pol.period and 2 * pol.period <= horizon + 1 else (horizon + 1) // 2
    if window >= 1:
        verdicts = classify_gas(tr, window)
        print(f"classification (window {window}, decay factor 0.5): " + ", ".join(
            f"{i}:{v}" for i, v in enumerate(verdicts, start=1)))
    else:
        print("horizon too short to classify")
    if args.design:
        res = _load_design(args.design)
        cert = verify_certificates(cfg.ncs, pol, res.certificates, tr, tol=1e-9)
        print(f"certificate checks: decay {cert.decay_violations}/{cert.decay_checks} violations,"
              f" switch {cert.switch_violations}/{cert.switch_checks} violations,"
              f" worst ratio {cert.worst_ratio:.12f} (tol 1e-9)")
        env = envelope_check(cfg.ncs, res.certificates, pol, tr, tol=1e-6)
        print(f"envelope checks: {env.violations} violations (tol 1e-6), c = "
              + ", ".join(f"{c:.4g}" for c in env.c))
        if not (cert.ok and env.ok):
            status = EXIT_VIOLATION
    return status


def cmd_check_cycle(args) -> int:
    cfg = load_config(args.config)
    W, T = _load_cycle_file(args.cycle, cfg.ncs.N) if args.cycle else (cfg.cycle(), None)
    print(f"cycle {W}: candidate contractive = {is_candidate_contractive(W)}")
    if cfg.scalars is None:
        raise ConfigError("check-cycle needs 'scalars' in the config")
    if T is None:
        T = find_T_factors(W, cfg.scalars, args.t_max or cfg.T_max)
        if T is None:
            print("no T-factors found")
            return EXIT_INFEASIBLE
        print(f"found T-factors {T}")
    res = is_T_contractive(W, T, cfg.scalars)
    print(f"T={tuple(T)} T-contractive={res.ok}")
    print("Ξ = " + ", ".join(f"{x:.4f}" for x in res.xi))
    return EXIT_OK if res.ok else EXIT_INFEASIBLE


def cmd_reproduce(args) -> int:
    if args.what == "examples":
        checks = reproduce.run_examples()
    elif args.what == "exp1":
        checks = reproduce.run_exp1(
            seed=reproduce.EXP1_SEED if args.seed is None else args.seed,
            t_max=args.t_max or 100,
            horizon=reproduce.EXP1_HORIZON if args.horizon is None else args.horizon,
        )
    else:
        ns = (args.n,) if args.n else (100, 200)
        checks = reproduce.run_exp2(ns, seed=args.seed or 0, t_max=args.t_max or 100)
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ncsched", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *flags):
        if "config" in flags:
            p.add_argument("--config", help="JSON run configuration")
        if "cycle" in flags:
            p.add_argument("--cycle", help="JSON cycle file: list of stable sets, or {sets, T}")
        if "seed" in flags:
            p.add_argument("--seed", type=int, help="override the configured seed")
        if "horizon" in flags:
            p.add_argument("--horizon", type=int)
        if "t-max" in flags:
            p.add_argument("--t-max", type=int, dest="t_max")
        p.add_argument("--out", help="output directory (default: stdout)")

    p = sub.add_parser("design", help="search certificates and T-factors for a cycle")
    common(p, "config", "cycle", "seed", "t-max")
    p.set_defaults(func=cmd_design, need_config=True)

    p = sub.add_parser("schedule", help="turn a design file into a policy file")
    p.add_argument("design", nargs="?", help="design.json from the design command")
    p.add_argument("--round-robin", action="store_true", help="emit the configured round-robin baseline")
    common(p, "config")
    p.set_defaults(func=cmd_schedule, need_config=False)

    p = sub.add_parser("simulate", help="simulate all plants under a policy")
    p.add_argument("--policy", help="policy file from the schedule command")
    p.add_argument("--design", help="design file; enables certificate and envelope checks")
    p.add_argument("--round-robin", action="store_true", help="use the configured round-robin baseline")
    common(p, "config", "seed", "horizon")
    p.set_defaults(func=cmd_simulate, need_config=True)

    p = sub.add_parser("check-cycle", help="evaluate a cycle against given scalars")
    common(p, "config", "cycle", "t-max")
    p.set_defaults(func=cmd_check_cycle, need_config=True)

    p = sub.add_parser("reproduce", help="run the reference reproductions")
    p.add_argument("what", choices=["examples", "exp1", "exp2"])
    p.add_argument("--n", type=int, help="single plant count for exp2")
    common(p, "seed", "horizon", "t-max")
    p.set_defaults(func=cmd_reproduce, need_config=False)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.need_config and not getattr(args, "config", None):
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    np.set_printoptions(precision=6, suppress=True)
    try:
        return args.func(args)
    except (ConfigError, PolicyFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NCSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
