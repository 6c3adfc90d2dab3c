"""Command-line entry point: `python -m tsgd {run,sweep,verify,rate,serve}`.

Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when an
acceptance check fails.
"""

import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from tsgd.config import get_settings
from tsgd.services.experiment import (
    emit_csv,
    fit_rate,
    gamma_sweep,
    load_config,
    read_aggregate_csv,
    run_paths,
    to_summary,
)
from tsgd.services.verification import run_verification
from tsgd.utils.exceptions import AcceptanceCheckError, TsgdError

logger = logging.getLogger("tsgd")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_ACCEPTANCE = 2


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _name_list(text: str) -> list[str]:
    names = [v.strip() for v in text.split(",") if v.strip()]
    unknown = set(names) - {"tsgd", "sgd"}
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown optimizers: {', '.join(sorted(unknown))}")
    return names


class _Parser(argparse.ArgumentParser):
    """Usage errors are invalid input, not acceptance failures."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsgd", description="Tamed SGD experiments and convergence checks")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the sample paths of one experiment")
    run.add_argument("config", help="experiment config (JSON)")
    run.add_argument("--output", help="aggregate CSV path; overrides the config's output")

    sweep = sub.add_parser("sweep", help="run one experiment per gamma")
    sweep.add_argument("config")
    sweep.add_argument("--gammas", type=_float_list, required=True, help="e.g. 1,100,10000")
    sweep.add_argument("--optimizers", type=_name_list, default=["tsgd", "sgd"])
    sweep.add_argument("--output", help="sweep CSV path")

    verify = sub.add_parser("verify", help="run the lemma property suite")
    verify.add_argument("--seed", type=int, default=0)

    rate = sub.add_parser("rate", help="fit the log-log slope of an aggregate CSV")
    rate.add_argument("aggregate", help="aggregate CSV written by `run`")
    rate.add_argument("--from", dest="n_min", type=int, required=True)
    rate.add_argument("--to", dest="n_max", type=int, required=True)
    rate.add_argument("--metric", choices=("err_sq", "f_gap"), default="err_sq")
    rate.add_argument("--expect-min", type=float, help="fail with exit code 2 below this slope")
    rate.add_argument("--expect-max", type=float, help="fail with exit code 2 above this slope")

    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_paths(cfg)
    output = args.output or cfg.output
    if output:
        emit_csv(result.aggregate, output)
        logger.info("wrote %d rows to %s", len(result.aggregate), output)
    else:
        print(to_summary(cfg, result).model_dump_json(indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = gamma_sweep(cfg, args.gammas, args.optimizers)
    if args.output:
        emit_csv(rows, args.output)
    else:
        for row in rows:
            print(f"gamma={row.gamma:g} {row.optimizer}: final={row.final_err} max={row.max_err} diverged={row.diverged}")
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_verification(seed=args.seed)
    for check in checks:
        print(f"{check.name}: {'PASS' if check.passed else 'FAIL'} ({check.cases} cases, {check.violations} violations)")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise AcceptanceCheckError(f"failed checks: {', '.join(failed)}")
    return EXIT_OK


def cmd_rate(args) -> int:
    slope = fit_rate(read_aggregate_csv(args.aggregate), args.n_min, args.n_max, metric=args.metric)
    print(f"{slope:.6f}")
    if args.expect_min is not None and slope < args.expect_min:
        raise AcceptanceCheckError(f"slope {slope:.4f} below {args.expect_min}")
    if args.expect_max is not None and slope > args.expect_max:
        raise AcceptanceCheckError(f"slope {slope:.4f} above {args.expect_max}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("tsgd.main:app", host=args.host, port=args.port, log_level=get_settings().log_level.lower())
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "rate": cmd_rate, "serve": cmd_serve}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except AcceptanceCheckError as exc:
        logger.error("%s", exc.detail)
        return EXIT_ACCEPTANCE
    except ValidationError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_INVALID
    except (TsgdError, OSError) as exc:
        logger.error("%s", getattr(exc, "detail", exc))
        return EXIT_INVALID
