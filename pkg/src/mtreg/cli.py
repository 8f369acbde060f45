"""Command-line interface: fit, ci, test and coverage on CSV data.

Examples::

    mtreg fit --data d.csv --response x --explanatory a
    mtreg ci --data d.csv --response x --explanatory a --alpha 0.05 --coef 1
    mtreg test --data d.csv --response x --explanatory a --null 0 --mode paper-verbatim
    mtreg coverage --data d.csv --explanatory a --beta 1,2 --sigma 1 --reps 20000 --seed 7

Structured output (``--format json``) is one object with keys ``command``,
``fit``, ``intervals``, ``tests``, ``coverage``, ``seed`` and ``mode``.
Floats are written with 17 significant digits.  Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from typing import Any, Sequence

from mtreg.dataset import (
    CellParseError,
    DataFileError,
    Dataset,
    MissingColumnError,
    TooFewRowsError,
    ingest_csv,
)
from mtreg.errors import DomainError, InsufficientDataError, MtregError, SingularDesignError
from mtreg.hyptest import DivisorMode, confidence_interval, hypothesis_test
from mtreg.regression import Design, RegressionFit, fit_glm, fit_simple
from mtreg.simulate import (
    SimulationPlan,
    coverage_from_draws,
    simulate_draws,
    studentization_from_draws,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_MISSING_COLUMN = 4
EXIT_PARSE = 5
EXIT_TOO_FEW_ROWS = 6
EXIT_SINGULAR = 7
EXIT_DOMAIN = 8


# --------------------------------------------------------------------------- #
# Output
# --------------------------------------------------------------------------- #


def format_float(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return format(v, ".17g")


def _json_string(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        return _json_string(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _cell(v: Any) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return format_float(v)
    if v is None:
        return "-"
    return str(v)


def _table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> list[str]:
    cells = [list(headers)] + [[_cell(v) for v in row] for row in rows]
    widths = [max(len(r[j]) for r in cells) for j in range(len(headers))]
    return ["  " + "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]


def to_text(report: dict) -> str:
    lines = [f"command: {report['command']['name']}", f"mode: {_cell(report['mode'])}", f"seed: {_cell(report['seed'])}"]
    fit = report["fit"]
    if fit is not None:
        lines += ["", f"fit (n={fit['n']}, m={fit['m']}, response={fit['response']})"]
        names = ["(intercept)"] + list(fit["explanatory"])
        lines += _table(["coef", "name", "beta_hat"], [[k, nm, b] for k, (nm, b) in enumerate(zip(names, fit["beta_hat"]))])
        lines += _table(
            ["quantity", "value"],
            [
                ["sigma_hat_sq_mle", fit["sigma_hat_sq_mle"]],
                ["sigma_hat_sq_unbiased", fit["sigma_hat_sq_unbiased"]],
                ["residual_min", fit["residuals"]["min"]],
                ["residual_max", fit["residuals"]["max"]],
                ["rss", fit["residuals"]["rss"]],
            ],
        )
    if report["intervals"]:
        lines += ["", "intervals"]
        keys = ["coef", "alpha", "center", "lo", "hi", "eta", "standard_error", "mode"]
        lines += _table(keys, [[iv[k] for k in keys] for iv in report["intervals"]])
    if report["tests"]:
        lines += ["", "tests"]
        keys = ["coef", "null", "alpha", "statistic", "threshold", "rejected", "mode"]
        lines += _table(keys, [[t[k] for k in keys] for t in report["tests"]])
    cov = report["coverage"]
    if cov is not None:
        lines += [
            "",
            f"coverage (replications={cov['replications']}, seed={cov['seed']}, alpha={format_float(cov['alpha'])}, df={cov['df']})",
        ]
        keys = ["coef", "mode", "empirical_coverage", "empirical_rejection_rate_at_true_null",
                "empirical_var_beta", "formula_var_beta"]
        lines += _table(keys, [[e[k] for k in keys] for e in cov["entries"]])
        lines += ["", "studentization"]
        keys = ["coef", "mode", "ks_distance", "points"]
        lines += _table(keys, [[e[k] for k in keys] for e in cov["studentization"]])
    if "timing" in report:
        lines += ["", f"elapsed_seconds: {format_float(report['timing']['elapsed_seconds'])}"]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- #
# Commands
# --------------------------------------------------------------------------- #


def _fit(ds: Dataset) -> RegressionFit:
    if ds.m == 1:
        return fit_simple(ds.a[:, 0], ds.x)
    return fit_glm(Design(ds.a), ds.x)


def _fit_dict(ds: Dataset, fit: RegressionFit) -> dict:
    res = [float(r) for r in fit.residuals]
    return {
        "n": ds.n,
        "m": ds.m,
        "response": ds.response_name,
        "explanatory": list(ds.explanatory_names),
        "beta_hat": [float(b) for b in fit.beta_hat],
        "sigma_hat_sq_mle": float(fit.sigma_hat_sq_mle),
        "sigma_hat_sq_unbiased": float(fit.sigma_hat_sq_unbiased),
        "residuals": {"min": min(res), "max": max(res), "rss": math.fsum(r * r for r in res)},
    }


def _coefs(args: argparse.Namespace, m: int) -> list[int]:
    if args.coef is None:
        return list(range(m + 1))
    if not 0 <= args.coef <= m:
        raise DomainError(f"--coef {args.coef} out of range 0..{m}")
    return [args.coef]


def _modes(raw: str) -> tuple[DivisorMode, ...]:
    if raw == "both":
        return (DivisorMode.EXACT, DivisorMode.PAPER_VERBATIM)
    return (DivisorMode.parse(raw),)


def _command_echo(args: argparse.Namespace) -> dict:
    skip = {"func", "format", "timing"}
    echo = {"name": args.command}
    for key, value in sorted(vars(args).items()):
        if key in skip or key == "command":
            continue
        echo[key] = list(value) if isinstance(value, tuple) else value
    return echo


def _empty_report(args: argparse.Namespace) -> dict:
    return {
        "command": _command_echo(args),
        "fit": None,
        "intervals": [],
        "tests": [],
        "coverage": None,
        "seed": None,
        "mode": None,
    }


def cmd_fit(args: argparse.Namespace) -> dict:
    ds = ingest_csv(args.data, args.response, args.explanatory)
    report = _empty_report(args)
    report["fit"] = _fit_dict(ds, _fit(ds))
    report["mode"] = DivisorMode.parse(args.mode).value
    return report


def cmd_ci(args: argparse.Namespace) -> dict:
    ds = ingest_csv(args.data, args.response, args.explanatory)
    fit = _fit(ds)
    mode = DivisorMode.parse(args.mode)
    report = _empty_report(args)
    report["fit"] = _fit_dict(ds, fit)
    report["mode"] = mode.value
    for k in _coefs(args, ds.m):
        iv = confidence_interval(fit, k, args.alpha, mode)
        report["intervals"].append(
            {
                "coef": k,
                "alpha": iv.alpha,
                "center": iv.center,
                "lo": iv.lo,
                "hi": iv.hi,
                "half_width": iv.half_width,
                "eta": iv.eta,
                "standard_error": iv.standard_error,
                "mode": iv.divisor_mode.value,
            }
        )
    return report


def cmd_test(args: argparse.Namespace) -> dict:
    ds = ingest_csv(args.data, args.response, args.explanatory)
    fit = _fit(ds)
    mode = DivisorMode.parse(args.mode)
    report = _empty_report(args)
    report["fit"] = _fit_dict(ds, fit)
    report["mode"] = mode.value
    for k in _coefs(args, ds.m):
        t = hypothesis_test(fit, k, args.null, args.alpha, mode)
        report["tests"].append(
            {
                "coef": k,
                "null": t.null_value,
                "alpha": t.alpha,
                "statistic": t.statistic,
                "threshold": t.threshold,
                "rejected": t.rejected,
                "standard_error": t.standard_error,
                "mode": t.divisor_mode.value,
            }
        )
    return report


def cmd_coverage(args: argparse.Namespace) -> dict:
    ds = ingest_csv(args.data, args.response, args.explanatory)
    report = _empty_report(args)
    if ds.x is not None:
        report["fit"] = _fit_dict(ds, _fit(ds))
    modes = _modes(args.mode)
    plan = SimulationPlan(
        design=Design(ds.a),
        beta=tuple(args.beta),
        sigma=args.sigma,
        replications=args.reps,
        alpha=args.alpha,
        master_seed=args.seed,
        divisor_modes=modes,
    )
    draws = simulate_draws(plan)
    cov = coverage_from_draws(plan, draws)
    stud = studentization_from_draws(plan, draws)
    report["coverage"] = {
        "replications": cov.replications,
        "seed": cov.seed,
        "alpha": cov.alpha,
        "df": cov.df,
        "beta": list(plan.beta),
        "sigma": float(plan.sigma),
        "entries": [
            {
                "coef": e.k,
                "mode": e.divisor_mode.value,
                "empirical_coverage": e.empirical_coverage,
                "empirical_rejection_rate_at_true_null": e.empirical_rejection_rate_at_true_null,
                "empirical_mean_beta": e.empirical_mean_beta,
                "empirical_var_beta": e.empirical_var_beta,
                "formula_var_beta": e.formula_var_beta,
            }
            for e in cov.entries
        ],
        "studentization": [
            {"coef": e.k, "mode": e.divisor_mode.value, "ks_distance": e.ks_distance, "points": e.points}
            for e in stud.entries
        ],
    }
    report["seed"] = args.seed
    report["mode"] = "both" if len(modes) > 1 else modes[0].value
    return report


# --------------------------------------------------------------------------- #
# Argument parsing
# --------------------------------------------------------------------------- #


def _alpha(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie strictly between 0 and 1, got {text}")
    return value


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"number must be finite, got {text}")
    return value


def _positive(text: str) -> float:
    value = _finite(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"value must be positive, got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"value must be at least 1, got {text}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid seed {text!r}") from None
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _names(text: str) -> tuple[str, ...]:
    names = tuple(s.strip() for s in text.split(",") if s.strip())
    if not names:
        raise argparse.ArgumentTypeError("expected a comma-separated list of column names")
    return names


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(_finite(s) for s in text.split(","))
    except argparse.ArgumentTypeError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


MODE_CHOICES = ("exact", "paper-verbatim", "paper_verbatim")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtreg", description="Regression fits, intervals, tests and coverage simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--data", required=True, help="CSV file with a header row")
    common.add_argument("--explanatory", required=True, type=_names, help="comma-separated explanatory column names")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--timing", action="store_true", help="add elapsed wall time to the report")

    def with_response(p: argparse.ArgumentParser, required: bool = True) -> None:
        p.add_argument("--response", required=required, help="response column name")

    p = sub.add_parser("fit", parents=[common], help="least-squares fit")
    with_response(p)
    p.add_argument("--mode", choices=MODE_CHOICES, default="exact")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ci", parents=[common], help="confidence intervals")
    with_response(p)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--coef", type=int, default=None, help="coefficient index (default: all)")
    p.add_argument("--mode", choices=MODE_CHOICES, default="exact")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("test", parents=[common], help="two-sided coefficient tests")
    with_response(p)
    p.add_argument("--null", type=_finite, required=True)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--coef", type=int, default=None, help="coefficient index (default: all)")
    p.add_argument("--mode", choices=MODE_CHOICES, default="exact")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("coverage", parents=[common], help="Monte Carlo coverage of the intervals")
    with_response(p, required=False)
    p.add_argument("--reps", type=_positive_int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--beta", type=_floats, required=True, help="true coefficients, intercept first")
    p.add_argument("--sigma", type=_positive, required=True)
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--mode", choices=MODE_CHOICES + ("both",), default="exact")
    p.set_defaults(func=cmd_coverage)
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, DataFileError):
        return EXIT_MISSING_FILE
    if isinstance(exc, MissingColumnError):
        return EXIT_MISSING_COLUMN
    if isinstance(exc, (CellParseError, UnicodeDecodeError)):
        return EXIT_PARSE
    if isinstance(exc, (TooFewRowsError, InsufficientDataError)):
        return EXIT_TOO_FEW_ROWS
    if isinstance(exc, SingularDesignError):
        return EXIT_SINGULAR
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    return EXIT_FAILURE


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        report = args.func(args)
    except (MtregError, UnicodeDecodeError) as exc:
        print(f"mtreg {args.command}: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    if args.timing:
        report["timing"] = {"elapsed_seconds": time.perf_counter() - started}
    out = to_json(report) + "\n" if args.format == "json" else to_text(report)
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
