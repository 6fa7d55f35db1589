"""``trialmech`` command line."""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

from . import harness as H
from .incentives import degeneracy_gap
from .io import load_instance
from .lp import LPError
from .model import InstanceError


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trialmech", description="Incentive-compatible trial mechanisms.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, seed=False):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--instance", required=True, help="instance JSON file")
        sp.add_argument("--out", help="CSV output path (default: stdout)")
        if seed:
            sp.add_argument("--seed", type=int, required=True)
            sp.add_argument("--reps", type=int, default=1000)
        return sp

    add("validate", "check an instance file")
    sp = add("bench", "benchmarks with their policies and certificates")
    sp.add_argument("--freq", type=_floats, help="type frequencies in type order")
    sp.add_argument("--policy-out", help="write the optimizing policies to this CSV")

    def mech_flags(sp):
        sp.add_argument("--horizon", type=int, help="T (main-stage length when --exogenous)")
        sp.add_argument("--warmup", type=int, help="warm-up samples per (arm, public type)")
        sp.add_argument("--exogenous", action="store_true", help="warm-up samples come from outside the trial")
        sp.add_argument("--eta", type=float, help="margin of the exploit policy")
        sp.add_argument("--freq-est", type=_floats, help="estimated type frequencies for the benchmark policy")

    mech_flags(add("ic-check", "policy- and mechanism-level BIR/BIC", seed=True))
    mech_flags(add("simulate", "MSE of the mechanism against stochastic and table adversaries", seed=True))
    sp = add("mle", "MLE error probability against warm-up size", seed=True)
    sp.add_argument("--eta", type=float)
    sp.add_argument("--samples", type=_ints, help="samples per pair, comma-separated")
    sp = add("lower-bound", "adversary pair against the mechanism's sampling probabilities", seed=True)
    mech_flags(sp)
    sp.add_argument("--freq", type=_floats, help="main-stage type frequencies (typed instances)")
    sp.add_argument("--state", type=int, default=0, help="support index of the base state")
    sp.add_argument("--prob-reps", type=int, default=10_000)
    sp = add("bad-types", "benchmark along mixtures of good and bad type frequencies")
    sp.add_argument("--freq", type=_floats, required=True, help="good type frequencies")
    sp.add_argument("--freq-bad", type=_floats, required=True, help="bad type frequencies")
    sp.add_argument("--eps-grid", type=_floats, default=[0.1, 0.01, 0.001])
    sp.add_argument("--eta", type=float)
    sp = add("reproduce", "empirical MSE against the theorem bounds", seed=True)
    mech_flags(sp)
    return p


def _config(args: argparse.Namespace) -> H.ExperimentConfig:
    keys = H.ExperimentConfig.__dataclass_fields__
    vals = {k: v for k, v in vars(args).items() if k in keys and v is not None}
    return H.ExperimentConfig(**vals)


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inst = load_instance(args.instance)
    except InstanceError as exc:
        for v in exc.violations:
            print(f"{args.instance}: {v}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{args.instance}: {exc.strerror}", file=sys.stderr)
        return 1
    cfg = _config(args)
    try:
        if args.command == "validate":
            header = ["arms", "outcomes", "public_types", "private_types", "states", "degeneracy_gap"]
            rows = [[inst.n_arms, inst.n_outcomes, inst.n_public, inst.n_private, inst.n_states,
                     degeneracy_gap(inst)]]
        elif args.command == "bench":
            header, rows, pheader, prows = H.cmd_bench(inst, cfg)
            if args.policy_out:
                H.write_csv(pheader, prows, args.policy_out)
        elif args.command == "ic-check":
            header, rows = H.cmd_ic_check(inst, cfg)
        elif args.command == "simulate":
            header, rows = H.cmd_simulate(inst, cfg)
        elif args.command == "mle":
            header, rows = H.cmd_mle(inst, cfg)
        elif args.command == "lower-bound":
            header, rows = H.cmd_lower_bound(inst, cfg)
        elif args.command == "bad-types":
            header, rows = H.cmd_bad_types(inst, cfg)
        else:
            header, rows = H.reproduce_theorem_bounds(cfg, inst)
    except (ValueError, LPError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1
    text = H.write_csv(header, rows, args.out)
    if not args.out:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
