"""Command-line entry points for the experiment harness."""

import argparse
import sys
from pathlib import Path

from .experiments import (ExperimentSpec, run_bit_sweep, run_convergence,
                          run_quantizer_validation, run_single,
                          run_tradeoff_sweep, summarize)
from .scenario import SystemConfig, load_config


def _int_list(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--bits", type=_int_list, default=None,
                        help="comma-separated DAC bit widths")
    parser.add_argument("--lambda", dest="lambdas", type=_float_list,
                        default=None, help="comma-separated beampattern weights")
    parser.add_argument("--mode", choices=("rsma", "sdma", "both"),
                        default="both")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", type=Path, default=Path("results"))
    parser.add_argument("--workers", type=int, default=1)


def _build_spec(args) -> ExperimentSpec:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode != "both":
        overrides["mode"] = args.mode
    if args.bits and len(args.bits) == 1:
        overrides["bits"] = args.bits[0]
    if args.lambdas and len(args.lambdas) == 1:
        overrides["lam"] = args.lambdas[0]
    if args.config is not None:
        cfg = load_config(args.config, overrides)
    else:
        cfg = SystemConfig(**overrides).validate()
    modes = ("rsma", "sdma") if args.mode == "both" else (args.mode,)
    return ExperimentSpec(cfg=cfg, bits=args.bits, lambdas=args.lambdas,
                          modes=modes, out_dir=args.out, workers=args.workers)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rsjrc",
        description="Joint radar-communication precoder design with rate "
                    "splitting under low-resolution DACs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("convergence", "export per-iteration residual traces over a bit sweep"),
            ("bitsweep", "sum-rate and NMSE of RSMA and SDMA over DAC bit widths"),
            ("tradeoff", "NMSE vs sum-rate frontier over the lambda grid"),
            ("validate-quantizer", "Monte-Carlo check of the linear DAC model"),
            ("single-run", "one design run with the given configuration")]:
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    args = parser.parse_args(argv)
    try:
        spec = _build_spec(args)
        if args.command == "convergence":
            paths = run_convergence(spec)
            for path in paths:
                print(path)
        elif args.command == "bitsweep":
            print(run_bit_sweep(spec))
        elif args.command == "tradeoff":
            for path in run_tradeoff_sweep(spec):
                print(path)
        elif args.command == "validate-quantizer":
            rows = run_quantizer_validation(spec, bits=args.bits)
            print(f"{'b':>3} {'gain':>10} {'delta':>10} {'resid_var':>12} "
                  f"{'model_var':>12} {'corr':>10}")
            for b, g_re, _, delta, rv, mv, corr in rows:
                print(f"{b:>3} {g_re:>10.5f} {delta:>10.5f} {rv:>12.5g} "
                      f"{mv:>12.5g} {corr:>10.3g}")
        elif args.command == "single-run":
            sol = run_single(spec)
            print(summarize(sol, spec.cfg))
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
