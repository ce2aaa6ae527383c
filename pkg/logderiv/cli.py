"""Command-line front end.

Every subcommand writes one table (CSV by default, JSON with --format json) to
standard output or --out; progress and logs go to standard error. Results are
reproducible: a given seed fixes every Haar draw, whatever --threads is.

Exit codes: 0 success, 1 invalid arguments, 2 a failed identity or statistical check.
"""
import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import pandas as pd

from logderiv import __version__
from logderiv.config import LOG_LEVEL, MAX_IDENTITY_K, run_defaults
from logderiv.ensembles import check_ensemble, density_histogram
from logderiv.errors import ConfluentLimitError, InvalidArgumentError, LogDerivError
from logderiv.formulas import (
    asymptotic_coefficients, asymptotic_moment, compare, exact_J, exact_moment_so_even,
    product_moment_so_even,
)
from logderiv.matcalc import derived_moment_coefficients, identity_suite, require_identities
from logderiv.moments import (
    ScaledPoint, estimate_pole_subtraction, pole_term, scaled_variance_usp,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


@dataclass
class RunConfig:
    command: str
    ensemble: Optional[str] = None
    K: Optional[int] = None
    N: Optional[int] = None
    a: Optional[float] = None
    samples: int = run_defaults["samples"]
    seed: int = run_defaults["seed"]
    threads: int = run_defaults["threads"]
    output_format: str = "csv"
    output_path: Optional[str] = None
    timestamp: bool = True


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidArgumentError(message)


def _add_output(parser: argparse.ArgumentParser):
    parser.add_argument("--format", dest="output_format", choices=["csv", "json"], default="csv")
    parser.add_argument("--out", dest="output_path", default=None, help="write here instead of stdout")
    parser.add_argument("--no-timestamp", dest="timestamp", action="store_false",
                        help="leave the timestamp out of JSON metadata")
    parser.add_argument("-v", "--verbose", action="count", default=0)


def _add_point(parser: argparse.ArgumentParser, ensemble: bool = True, K: bool = True):
    if ensemble:
        parser.add_argument("--ensemble", choices=["so-even", "so-odd", "usp"], required=True)
    if K:
        parser.add_argument("--K", type=int, default=1)
    parser.add_argument("--N", type=int, required=True)
    parser.add_argument("--a", type=float, required=True, help="scaled point, s = exp(-a/N)")


def _add_sampling(parser: argparse.ArgumentParser):
    parser.add_argument("--samples", type=int, default=run_defaults["samples"])
    parser.add_argument("--seed", type=int, default=run_defaults["seed"],
                        help="default from LOGDET_SEED")
    parser.add_argument("--threads", type=int, default=run_defaults["threads"],
                        help="worker processes; output does not depend on this")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="logderiv", description="Moments of the log-derivative of characteristic "
                                                  "polynomials over SO(2N), SO(2N+1) and USp(2N)")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-identities", help="run the exact determinant identity suite")
    p.add_argument("--max-K", type=int, default=min(run_defaults["identity_bound"], MAX_IDENTITY_K))
    p.add_argument("--derivative-bound", type=int, default=run_defaults["derivative_bound"])
    _add_output(p)

    for name, text in (("moment", "Monte Carlo moment with closed forms alongside"),
                       ("compare", "Monte Carlo moment checked against the best closed form")):
        p = sub.add_parser(name, help=text)
        _add_point(p)
        _add_sampling(p)
        if name == "compare":
            p.add_argument("--z-threshold", type=float, default=3.0)
            p.add_argument("--tolerance", type=float, default=0.15,
                           help="relative tolerance used when no exact value exists")
        _add_output(p)

    p = sub.add_parser("pole-subtracted", help="SO(2N+1) moment without the forced eigenvalue")
    _add_point(p, ensemble=False)
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("variance", help="USp(2N) scaled variance of Lambda'/Lambda / N")
    _add_point(p, ensemble=False, K=False)
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("density-histogram", help="eigenangle density in mean-spacing units")
    p.add_argument("--ensemble", choices=["so-even", "so-odd", "usp"], required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--bins", type=int, default=30)
    p.add_argument("--x-max", type=float, default=3.0)
    _add_sampling(p)
    _add_output(p)

    p = sub.add_parser("exact", help="exact SO(2N) moments at finite N")
    p.add_argument("--K", type=int, default=1, choices=[1, 2])
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--alphas", type=float, nargs="+", default=None,
                   help="distinct shifts for the product moment")
    _add_output(p)

    p = sub.add_parser("asymptotic", help="leading and next-to-leading asymptotics")
    _add_point(p)
    p.add_argument("--derived", action="store_true",
                   help="also print the coefficients derived from the determinant expansion")
    _add_output(p)
    return parser


# -- Output --------------------------------------------------------------------

def _config(args: argparse.Namespace) -> RunConfig:
    fields = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if hasattr(args, k)}
    if fields.get("ensemble"):
        fields["ensemble"] = check_ensemble(fields["ensemble"])
    return RunConfig(**fields)


def emit(rows: List[Dict[str, object]], config: RunConfig):
    """Write rows as CSV or as JSON with a metadata header"""
    frame = pd.DataFrame(rows)
    if config.output_format == "csv":
        text = frame.to_csv(index=False)
    else:
        metadata = {"version": __version__, "command": config.command, "seed": config.seed}
        if config.timestamp:
            metadata["timestamp"] = datetime.now(timezone.utc).isoformat()
        # repr floats, as in the CSV
        records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
        text = json.dumps({"metadata": metadata, "rows": records}, indent=2) + "\n"
    if config.output_path:
        with open(config.output_path, "w", encoding="utf-8") as handle:
            handle.write(text)
        logger.info("wrote %d rows to %s", len(rows), config.output_path)
    else:
        sys.stdout.write(text)


# -- Commands ------------------------------------------------------------------

def cmd_verify_identities(args, config: RunConfig) -> int:
    results = identity_suite(args.max_K, args.derivative_bound, seed=config.seed)
    emit([r.as_row() for r in results], config)
    require_identities(results)
    return EXIT_OK


def cmd_moment(args, config: RunConfig) -> int:
    result = compare(config.ensemble, config.K, config.N, config.a, config.samples, config.seed, config.threads)
    emit([result.as_row()], config)
    return EXIT_OK


def cmd_compare(args, config: RunConfig) -> int:
    result = compare(config.ensemble, config.K, config.N, config.a, config.samples, config.seed, config.threads)
    row = result.as_row()
    row["reference"] = result.reference
    row["p_value"] = result.p_value
    if result.exact is not None:
        passed = abs(result.z_score) <= args.z_threshold
    else:
        passed = abs(result.ratio - 1) <= args.tolerance
    row["status"] = "PASS" if passed else "FAIL"
    emit([row], config)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_pole_subtracted(args, config: RunConfig) -> int:
    point = ScaledPoint(config.N, config.a)
    subtracted, full = estimate_pole_subtraction(config.K, point, config.samples, config.seed, config.threads)
    emit([{
        "ensemble": "so_odd", "K": config.K, "N": config.N, "a": config.a,
        "samples": config.samples, "seed": config.seed,
        "mc_mean": subtracted.mean, "mc_stderr": subtracted.std_error,
        "unsubtracted_mean": full.mean, "pole_term": pole_term(point),
    }], config)
    return EXIT_OK


def cmd_variance(args, config: RunConfig) -> int:
    point = ScaledPoint(config.N, config.a)
    value = scaled_variance_usp(point, config.samples, config.seed, config.threads)
    emit([{"ensemble": "usp", "N": config.N, "a": config.a, "samples": config.samples,
           "seed": config.seed, "scaled_variance": value}], config)
    return EXIT_OK


def cmd_density_histogram(args, config: RunConfig) -> int:
    frame = density_histogram(config.ensemble, config.N, config.samples, args.bins, config.seed, args.x_max)
    emit(frame.to_dict(orient="records"), config)
    return EXIT_OK


def cmd_exact(args, config: RunConfig) -> int:
    if args.alphas:
        j_value = exact_J(args.alphas, config.N)
        emit([{"N": config.N, "alphas": " ".join(repr(x) for x in args.alphas),
               "J": j_value, "moment": product_moment_so_even(args.alphas, config.N)}], config)
        return EXIT_OK
    if config.a is None:
        raise InvalidArgumentError("exact needs --a or --alphas")
    point = ScaledPoint(config.N, config.a)
    emit([{"ensemble": "so_even", "K": config.K, "N": config.N, "a": config.a,
           "exact": exact_moment_so_even(config.K, config.N, point.alpha),
           "asymptotic": asymptotic_moment("so_even", config.K, config.N, config.a).value}], config)
    return EXIT_OK


def cmd_asymptotic(args, config: RunConfig) -> int:
    result = asymptotic_moment(config.ensemble, config.K, config.N, config.a)
    row = asdict(result)
    row["value"] = result.value
    stated = asymptotic_coefficients(config.ensemble, config.K)
    row["coefficients"] = " ".join(f"{m - config.K}:{c}" for m, c in sorted(stated.items()))
    if args.derived:
        derived = derived_moment_coefficients(config.ensemble, config.K, max(stated))
        row["derived"] = " ".join(f"{m - config.K}:{c}" for m, c in enumerate(derived))
    emit([row], config)
    return EXIT_OK


COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "moment": cmd_moment,
    "compare": cmd_compare,
    "pole-subtracted": cmd_pole_subtracted,
    "variance": cmd_variance,
    "density-histogram": cmd_density_histogram,
    "exact": cmd_exact,
    "asymptotic": cmd_asymptotic,
}


def _configure_logging(verbosity: int):
    level = LOG_LEVEL
    if verbosity == 1:
        level = "INFO"
    elif verbosity > 1:
        level = "DEBUG"
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except InvalidArgumentError as exc:
        sys.stderr.write(f"logderiv: error: {exc}\n")
        return EXIT_INVALID
    _configure_logging(getattr(args, "verbose", 0))
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except (InvalidArgumentError, ValueError, ConfluentLimitError) as exc:
        logger.error("%s", exc)
        return EXIT_INVALID
    except LogDerivError as exc:
        logger.error("%s", exc)
        return EXIT_FAILED
