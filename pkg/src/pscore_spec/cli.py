"""Command-line front end.

    pscore-spec fit      --input data.csv --treatment D
    pscore-spec test     --input data.csv --treatment D --bootstrap 999 --shaikh-c 0.05,0.10
    pscore-spec simulate --dgp 1,2 --n 200,400 --reps 1000 --bootstrap 499
    pscore-spec ecdf     --n 1000 --seed 7 --output ecdf.csv --figure ecdf.png

Exit codes: 0 success, 2 usage error, 3 invalid input, 4 no convergence
(including separation), 5 singular design, 6 degenerate variance.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import report as rp
from .errors import InvalidInput, PscoreSpecError
from .kernel_test import BANDWIDTH_CONSTANTS
from .mc import McConfig, ecdf_comparison, run_experiment
from .model import Dataset, fit
from .workflow import specification_test

log = logging.getLogger("pscore_spec")

DEFAULT_B = 999
DEFAULT_ALPHAS = (0.01, 0.05, 0.10)
DEFAULT_SEED = 12345

# flat config keys accepted by `simulate --config`
SIM_CONFIG_KEYS = {
    "dgp": "comma-separated DGP ids, 1..10",
    "n": "comma-separated sample sizes",
    "reps": "Monte Carlo replications per cell",
    "bootstrap": "bootstrap replications B",
    "alpha": "comma-separated significance levels",
    "shaikh_c": "comma-separated bandwidth constants, or 'none'",
    "seed": "master seed",
    "link": "probit or logit",
    "estimator": "mle or nlls",
    "retries": "resampling cap per replication",
    "jobs": "worker processes",
}


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _floats(text: str, what: str) -> tuple:
    if text is None:
        return ()
    if text.strip().lower() in ("", "none"):
        return ()
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise InvalidInput(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, what: str) -> tuple:
    try:
        return tuple(int(t) for t in str(text).split(","))
    except ValueError:
        raise InvalidInput(f"{what}: expected comma-separated integers, got {text!r}") from None


def _alphas(text) -> tuple:
    alphas = _floats(text, "--alpha") if isinstance(text, str) else tuple(text)
    if not alphas or not all(0.0 < a < 1.0 for a in alphas):
        raise InvalidInput(f"--alpha values must lie in (0, 1), got {text!r}")
    return alphas


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_csv(path, treatment: str, covariates=None, intercept: bool = True) -> Dataset:
    """Strict CSV ingestion: header row, comma separated, '.' decimals, 0/1 treatment."""
    path = Path(path)
    if not path.is_file():
        raise InvalidInput(f"input file not found: {path}")
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise InvalidInput(f"{path}: not valid UTF-8 ({exc})") from None
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise InvalidInput(f"{path}: file is empty")
    header = [h.strip() for h in rows[0]]
    if all(_is_number(h) for h in header):
        raise InvalidInput(f"{path}: missing header row (row 1 is numeric: {rows[0][:4]}...)")
    if len(set(header)) != len(header):
        raise InvalidInput(f"{path}: duplicate column names in header")
    if treatment not in header:
        raise InvalidInput(f"{path}: treatment column {treatment!r} not in header {header}")
    if covariates:
        missing = [c for c in covariates if c not in header]
        if missing:
            raise InvalidInput(f"{path}: covariate columns {missing} not in header {header}")
        if treatment in covariates:
            raise InvalidInput("the treatment column cannot also be a covariate")
        cov = list(covariates)
    else:
        cov = [h for h in header if h != treatment]
    if not cov and not intercept:
        raise InvalidInput("no covariates selected")
    ti = header.index(treatment)
    ci = [header.index(c) for c in cov]
    d = np.empty(len(rows) - 1)
    x = np.empty((len(rows) - 1, len(cov)))
    for r, row in enumerate(rows[1:]):
        line = r + 2
        if len(row) != len(header):
            raise InvalidInput(f"{path}: row {line} has {len(row)} fields, header has {len(header)}")
        tv = row[ti].strip()
        if tv not in ("0", "1"):
            raise InvalidInput(f"{path}: row {line}, column {treatment!r}: treatment must be 0 or 1, got {tv!r}")
        d[r] = float(tv)
        for j, c in enumerate(ci):
            cell = row[c].strip()
            try:
                val = float(cell)
            except ValueError:
                raise InvalidInput(f"{path}: row {line}, column {header[c]!r}: not a number: {cell!r}") from None
            if not math.isfinite(val):
                raise InvalidInput(f"{path}: row {line}, column {header[c]!r}: non-finite value {cell!r}")
            x[r, j] = val
    names = tuple(cov)
    if intercept:
        x = np.column_stack([np.ones(x.shape[0]), x])
        names = ("const",) + names
    return Dataset(d, x, names)


def _emit(text: str, output):
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    data = read_csv(args.input, args.treatment, _cov(args), not args.no_intercept)
    fitted = fit(data, args.link, args.estimator)
    meta = {"input": str(args.input), "treatment": args.treatment}
    _emit(rp.render_fit(fitted, args.format, meta), args.output)
    return 0


def cmd_test(args) -> int:
    data = read_csv(args.input, args.treatment, _cov(args), not args.no_intercept)
    alphas = _alphas(args.alpha)
    if args.bootstrap < 1:
        raise InvalidInput("--bootstrap must be at least 1")
    cs = _floats(args.shaikh_c, "--shaikh-c")
    if any(c <= 0 for c in cs):
        raise InvalidInput("--shaikh-c constants must be positive")
    res = specification_test(
        data,
        link=args.link,
        B=args.bootstrap,
        seed=args.seed,
        alphas=alphas,
        shaikh_c=cs,
        estimator=args.estimator,
    )
    meta = {"input": str(args.input), "treatment": args.treatment}
    _emit(rp.render_test(res, args.format, alphas, meta), args.output)
    if args.figure:
        from .plotting import plot_process

        plot_process(res, args.figure, alpha=0.05 if 0.05 in alphas else alphas[0])
    return 0


def load_sim_config(path) -> dict:
    """Read a flat ``key = value`` file (no sections; '#' comments)."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[simulate]\n" + text)
    except configparser.Error as exc:
        raise InvalidInput(f"{path}: {exc}") from None
    out = dict(parser["simulate"])
    unknown = sorted(set(out) - set(SIM_CONFIG_KEYS))
    if unknown:
        raise InvalidInput(f"{path}: unknown keys {unknown}; allowed: {sorted(SIM_CONFIG_KEYS)}")
    return out


def sim_config(args) -> McConfig:
    raw = load_sim_config(args.config) if args.config else {}
    for key, attr in (
        ("dgp", "dgp"),
        ("n", "n"),
        ("reps", "reps"),
        ("bootstrap", "bootstrap"),
        ("alpha", "alpha"),
        ("shaikh_c", "shaikh_c"),
        ("seed", "seed"),
        ("link", "link"),
        ("estimator", "estimator"),
        ("retries", "retries"),
        ("jobs", "jobs"),
    ):
        val = getattr(args, attr, None)
        if val is not None:
            raw[key] = str(val)
    try:
        return McConfig(
            dgps=_ints(raw.get("dgp", "1"), "dgp"),
            sizes=_ints(raw.get("n", "200"), "n"),
            reps=int(raw.get("reps", 1000)),
            B=int(raw.get("bootstrap", 499)),
            shaikh_c=_floats(raw["shaikh_c"], "shaikh_c") if "shaikh_c" in raw else BANDWIDTH_CONSTANTS,
            alphas=_alphas(raw.get("alpha", "0.05")),
            seed=int(raw.get("seed", DEFAULT_SEED)),
            link=raw.get("link", "probit"),
            estimator=raw.get("estimator", "mle"),
            retries=int(raw.get("retries", 100)),
            jobs=int(raw.get("jobs", 1)),
        )
    except ValueError as exc:
        raise InvalidInput(f"simulation config: {exc}") from None


def cmd_simulate(args) -> int:
    cfg = sim_config(args)
    table = run_experiment(cfg)
    _emit(rp.render_table(table, args.format, cfg), args.output)
    if args.figure:
        from .plotting import plot_rejections

        plot_rejections(table, args.figure, alpha=0.05 if 0.05 in cfg.alphas else cfg.alphas[0])
    return 0


def cmd_ecdf(args) -> int:
    n = args.n if args.n is not None else 1000
    try:
        comp = ecdf_comparison(int(n), args.seed, args.link)
    except ValueError as exc:
        raise InvalidInput(str(exc)) from None
    fmt = "json" if args.format == "json" else "csv"
    _emit(rp.render_ecdf(comp, fmt, {"n": int(n), "seed": args.seed}), args.output)
    if args.figure:
        from .plotting import plot_ecdf

        plot_ecdf(comp, args.figure)
    return 0


def _cov(args):
    if not args.covariates:
        return None
    return [c.strip() for c in args.covariates.split(",") if c.strip()]


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="pscore-spec",
        description="Projection-based specification tests for propensity-score models.",
    )
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, default_format):
        sp.add_argument("--format", choices=rp.FORMATS, default=default_format)
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--link", choices=("probit", "logit"), default=None)

    def data_args(sp):
        sp.add_argument("--input", required=True, help="CSV file with a header row")
        sp.add_argument("--treatment", required=True, help="name of the 0/1 treatment column")
        sp.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
        sp.add_argument("--no-intercept", action="store_true", help="do not prepend a constant column")
        sp.add_argument("--estimator", choices=("mle", "nlls"), default="mle")

    sp = sub.add_parser("fit", help="fit the propensity-score model only")
    common(sp, "text")
    data_args(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("test", help="CvM/KS projection tests with multiplier bootstrap")
    common(sp, "text")
    data_args(sp)
    sp.add_argument("--bootstrap", type=int, default=DEFAULT_B, metavar="B")
    sp.add_argument("--alpha", default=",".join(str(a) for a in DEFAULT_ALPHAS))
    sp.add_argument("--shaikh-c", default=None, help="bandwidth constants for the kernel test")
    sp.add_argument("--figure", help="also render the projected process to this image file")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("simulate", help="Monte Carlo rejection rates for DGP1-DGP10")
    common(sp, "csv")
    sp.add_argument("--config", help="flat key = value file; flags override it")
    sp.add_argument("--dgp", default=None)
    sp.add_argument("--n", default=None)
    sp.add_argument("--reps", type=int, default=None)
    sp.add_argument("--bootstrap", type=int, default=None, metavar="B")
    sp.add_argument("--alpha", default=None)
    sp.add_argument("--shaikh-c", default=None)
    sp.add_argument("--estimator", choices=("mle", "nlls"), default=None)
    sp.add_argument("--retries", type=int, default=None)
    sp.add_argument("--jobs", type=int, default=None)
    sp.add_argument("--figure", help="also render rejection rates against n to this image file")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("ecdf", help="ECDF of fitted scores, misspecified vs correct model (DGP7)")
    common(sp, "csv")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--figure", help="also render the two ECDFs to this image file")
    sp.set_defaults(func=cmd_ecdf)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command != "simulate":
        if args.seed is None:
            args.seed = DEFAULT_SEED
        if args.link is None:
            args.link = "probit"
    try:
        return args.func(args)
    except PscoreSpecError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
