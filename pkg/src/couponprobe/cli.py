"""Command line front end.

Subcommands: run one policy and report summary statistics, compare several
policies on paired worlds, query the exact adaptive optimum, or validate an
instance file.  Reports are machine-readable text; apart from the opt-in
timing line, every field is a pure function of the instance bytes and flags.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
import time
from dataclasses import dataclass

from .instance_io import InstanceFormatError, load_instance
from .model import COST_MODE_THRESHOLD, COST_MODES, Instance
from .oracle import OracleSizeError, optimal_adaptive_value
from .relaxation import RelaxationConfig
from .rounding import Alg1Policy
from .sequencing import Alg2Policy, PolicyEvaluation, StochCpPolicy, evaluate_policy

POLICY_NAMES = ("alg1", "alg2", "stoch-cp", "e-alg1", "e-alg2", "e-stoch-cp", "opt-oracle")


@dataclass
class RunReport:
    policy: str
    instance_sha256: str
    worlds: int
    rng_seed: int
    beta: float
    delta: float | None
    marginal_samples: int
    cost_mode: str
    extended: bool
    mean: float
    stderr: float
    violations: int
    branch_freq: dict[str, float]
    elapsed_s: float


def _resolve_policy_name(name: str, extended_flag: bool) -> tuple[str, bool]:
    if name not in POLICY_NAMES:
        raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
    extended = extended_flag or name.startswith("e-")
    base = name[2:] if name.startswith("e-") else name
    return base, extended


def make_policy(name: str, instance: Instance, config: RelaxationConfig, extended_flag: bool = False):
    """Instantiate a policy by CLI name; 'e-' prefixes force extended mode."""
    base, extended = _resolve_policy_name(name, extended_flag)
    if base == "alg1":
        return Alg1Policy(instance, config, use_W=extended)
    if base == "alg2":
        return Alg2Policy(instance, W=instance.W if extended else None)
    if base == "stoch-cp":
        return StochCpPolicy(instance, config, extended=extended)
    raise ValueError(f"policy {name!r} is not world-simulated; use the oracle subcommand")


def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _config_from_args(args) -> RelaxationConfig:
    return RelaxationConfig(
        beta=args.beta,
        delta=args.delta,
        marginal_samples=args.marginal_samples,
        rng_seed=args.seed,
        cost_mode=args.cost_mode,
    )


def build_run_report(args, instance: Instance, name: str) -> RunReport:
    config = _config_from_args(args)
    base, extended = _resolve_policy_name(name, args.extended)
    start = time.perf_counter()
    if base == "opt-oracle":
        value = optimal_adaptive_value(instance, restricted=False, use_W=extended)
        evaluation = PolicyEvaluation(mean=value, stderr=0.0, worlds=0, violations=0)
    else:
        policy = make_policy(name, instance, config, args.extended)
        evaluation = evaluate_policy(instance, policy, args.worlds, args.seed)
    elapsed = time.perf_counter() - start
    branch_freq = {
        branch: count / evaluation.worlds
        for branch, count in sorted(evaluation.branch_counts.items())
    } if getattr(evaluation, "branch_counts", None) else {}
    return RunReport(
        policy=name,
        instance_sha256=_sha256(args.instance),
        worlds=evaluation.worlds,
        rng_seed=args.seed,
        beta=config.resolved_beta(extended),
        delta=args.delta,
        marginal_samples=args.marginal_samples,
        cost_mode=args.cost_mode,
        extended=extended,
        mean=evaluation.mean,
        stderr=evaluation.stderr,
        violations=evaluation.violations,
        branch_freq=branch_freq,
        elapsed_s=elapsed,
    )


def format_run_report(report: RunReport, timing: bool = False) -> str:
    lines = [
        f"policy {report.policy}",
        f"instance_sha256 {report.instance_sha256}",
        f"worlds {report.worlds}",
        f"seed {report.rng_seed}",
        f"beta {report.beta!r}",
        f"delta {report.delta!r}" if report.delta is not None else "delta auto",
        f"marginal_samples {report.marginal_samples}",
        f"cost_mode {report.cost_mode}",
        f"extended {str(report.extended).lower()}",
        f"mean {report.mean!r}",
        f"stderr {report.stderr!r}",
        f"violations {report.violations}",
    ]
    for branch, freq in report.branch_freq.items():
        lines.append(f"branch_{branch} {freq!r}")
    if timing:
        lines.append(f"elapsed_s {report.elapsed_s!r}")
    return "\n".join(lines) + "\n"


def _cmd_run(args) -> int:
    instance = load_instance(args.instance)
    report = build_run_report(args, instance, args.policy)
    sys.stdout.write(format_run_report(report, timing=args.timing))
    return 0


def _cmd_compare(args) -> int:
    names: list[str] = []
    for chunk in args.policy:
        names.extend(p for p in chunk.split(",") if p)
    if len(names) < 2:
        raise ValueError("compare needs at least two policies")
    instance = load_instance(args.instance)
    out = [
        f"# instance_sha256 {_sha256(args.instance)}",
        f"# worlds {args.worlds}",
        f"# seed {args.seed}",
        "policy,mean,stderr,violations,error",
    ]
    for name in names:
        try:
            report = build_run_report(args, instance, name)
            out.append(f"{name},{report.mean!r},{report.stderr!r},{report.violations},")
        except Exception as exc:  # isolate the failing row, keep comparing
            out.append(f"{name},,,,{str(exc).replace(',', ';')}")
    sys.stdout.write("\n".join(out) + "\n")
    return 0


def _cmd_oracle(args) -> int:
    instance = load_instance(args.instance)
    value = optimal_adaptive_value(instance, restricted=args.restricted, use_W=args.extended)
    sys.stdout.write(
        f"restricted {str(args.restricted).lower()}\n"
        f"extended {str(args.extended).lower()}\n"
        f"value {value!r}\n"
    )
    return 0


def _cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    sys.stdout.write(
        f"ok users {instance.n_users} edges {len(instance.graph.edges)} "
        f"coupons {len(instance.coupons)} K {instance.K} B {instance.B!r}"
        + (f" W {instance.W}" if instance.W is not None else "")
        + "\n"
    )
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("instance", help="instance file")
    parser.add_argument("--beta", type=float, default=None, help="constraint scaling in [0, 1/2]")
    parser.add_argument("--delta", type=float, default=None, help="ascent step size in (0, 1]")
    parser.add_argument("--worlds", type=int, default=10000, help="simulated worlds per policy")
    parser.add_argument("--seed", type=int, default=0, help="root RNG seed")
    parser.add_argument("--extended", action="store_true", help="enforce the cap on distinct users probed")
    parser.add_argument("--cost-mode", choices=COST_MODES, default=COST_MODE_THRESHOLD)
    parser.add_argument("--marginal-samples", type=int, default=200)
    parser.add_argument("--timing", action="store_true", help="append the elapsed-time line to reports")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="couponprobe",
        description="Adaptive coupon probing policies for influence maximization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one policy and print a report")
    _add_common(p_run)
    p_run.add_argument("--policy", required=True, help=f"one of: {', '.join(POLICY_NAMES)}")
    p_run.set_defaults(func=_cmd_run)

    p_cmp = sub.add_parser("compare", help="evaluate several policies on paired worlds")
    _add_common(p_cmp)
    p_cmp.add_argument(
        "--policy", action="append", required=True,
        help="policy name; repeat the flag or separate names with commas",
    )
    p_cmp.set_defaults(func=_cmd_compare)

    p_orc = sub.add_parser("oracle", help="exact optimal adaptive value (tiny instances)")
    p_orc.add_argument("instance", help="instance file")
    p_orc.add_argument("--restricted", action="store_true",
                       help="force each user's offers into consecutive rounds")
    p_orc.add_argument("--extended", action="store_true",
                       help="enforce the cap on distinct users probed")
    p_orc.set_defaults(func=_cmd_oracle)

    p_val = sub.add_parser("validate", help="check an instance file and summarize it")
    p_val.add_argument("instance", help="instance file")
    p_val.set_defaults(func=_cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceFormatError, OracleSizeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
