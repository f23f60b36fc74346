"""Command-line entry point ``gfr-bayes``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, NumericalError, SampleError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def _cmd_run(args) -> int:
    from .harness import emit_tables, parse_config, run_sweep

    text = Path(args.config).read_text()
    overrides = {"seed": args.seed, "entropy_mode": args.entropy_mode, "repetitions": args.repetitions}
    config = parse_config(text, **overrides)
    rows = run_sweep(config, jobs=args.jobs)
    paths = emit_tables(rows, config, args.out)
    for key in ("estimates", "variances", "risks", "meta"):
        print(paths[key])
    return EXIT_OK


def _cmd_estimate(args) -> int:
    from .model import ModelConfig
    from .posterior import LossConstants, estimate
    from .sample import read_sample

    sample, file_theta = read_sample(args.sample)
    theta = file_theta if args.theta is None else args.theta
    if args.theta is not None and args.theta != file_theta:
        raise ConfigError(f"--theta {args.theta} disagrees with theta {file_theta} in {args.sample}")
    cfg = ModelConfig(theta, args.lambda1, args.lambda2, args.rho)
    loss = LossConstants(c1=args.c1, c2=args.c2)
    est = estimate(sample, cfg, loss, args.entropy_mode)
    for key, value in est.as_dict().items():
        flag = "  (divergent terms: Gamma(0))" if est.divergence_flags.get(key) else ""
        print(f"{key} = {value!r}{flag}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    from .validation import run_checks

    results = run_checks(quick=not args.full)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += not ok
    return EXIT_OK if not failed else EXIT_NUMERIC


def _cmd_draws(args) -> int:
    from .harness import parse_config
    from .mcmc import thinned_draws, write_draws

    config = parse_config(Path(args.config).read_text(), seed=args.seed)
    draws, state = thinned_draws(config.model, config.mh, args.count, args.thin)
    write_draws(args.out, draws)
    print(f"wrote {len(draws)} draws to {args.out} (acceptance rate {state.acceptance_rate:.4f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfr-bayes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a configured simulation sweep and write CSV tables")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--entropy-mode", choices=("strict", "drop"))
    run.add_argument("--repetitions", type=int)
    run.add_argument("--out", help="output directory (default: 'output' key of the config, else '.')")
    run.add_argument("--jobs", type=int, default=1, help="sweep points evaluated in parallel")
    run.set_defaults(func=_cmd_run)

    est = sub.add_parser("estimate", help="print the six Bayes estimates for one sample file")
    est.add_argument("--sample", required=True)
    est.add_argument("--theta", type=float)
    est.add_argument("--lambda1", type=float, required=True)
    est.add_argument("--lambda2", type=float, required=True)
    est.add_argument("--rho", type=float, required=True)
    est.add_argument("--c1", type=float, default=1.0)
    est.add_argument("--c2", type=float, default=1.0)
    est.add_argument("--entropy-mode", choices=("strict", "drop"), default="drop")
    est.set_defaults(func=_cmd_estimate)

    val = sub.add_parser("validate", help="cross-check closed forms against the quadrature oracles")
    val.add_argument("--full", action="store_true", help="use the larger check grids")
    val.set_defaults(func=_cmd_validate)

    dr = sub.add_parser("draws", help="dump thinned sampler draws, one per line")
    dr.add_argument("--config", required=True)
    dr.add_argument("--count", type=int, default=10000)
    dr.add_argument("--thin", type=int)
    dr.add_argument("--seed", type=int)
    dr.add_argument("--out", required=True)
    dr.set_defaults(func=_cmd_draws)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, SampleError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
