"""Serialise fit, test, simulation and ECDF results as json, csv, markdown or text.

Numbers are written with ``repr`` everywhere so that every value in a text
report is also, verbatim, a value of the json report, and so that output is
byte-identical for identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np
from scipy.stats import norm

from .model import FittedModel, standard_errors

FORMATS = ("json", "csv", "markdown", "text")


def num(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _clean(obj):
    """Convert numpy scalars/arrays so json.dumps gives stable output."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(payload: dict) -> str:
    return json.dumps(_clean(payload), indent=2) + "\n"


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------


def fit_payload(fitted: FittedModel) -> dict:
    se = standard_errors(fitted)
    q = np.asarray(fitted.qhat)
    quart = np.quantile(q, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "link": fitted.link.tag,
        "estimator": fitted.method,
        "n": fitted.n,
        "converged": fitted.converged,
        "iterations": fitted.iterations,
        "gradient_norm": fitted.gradient_norm,
        "objective": fitted.objective,
        "coefficients": [
            {"name": name, "estimate": est, "std_error": s, "z": est / s}
            for name, est, s in zip(fitted.names, fitted.theta, se)
        ],
        "propensity_summary": {
            "min": quart[0],
            "q25": quart[1],
            "median": quart[2],
            "q75": quart[3],
            "max": quart[4],
            "mean": float(q.mean()),
        },
    }


def _fit_text(p: dict) -> list[str]:
    lines = [
        f"link: {p['link']}",
        f"estimator: {p['estimator']}",
        f"n: {p['n']}",
        f"converged: {p['converged']}",
        f"iterations: {p['iterations']}",
        f"gradient_norm: {num(p['gradient_norm'])}",
        f"objective: {num(p['objective'])}",
        "coefficients:",
    ]
    for c in p["coefficients"]:
        lines.append(
            f"  {c['name']}: estimate={num(c['estimate'])} std_error={num(c['std_error'])} z={num(c['z'])}"
        )
    lines.append("propensity_summary:")
    for k, v in p["propensity_summary"].items():
        lines.append(f"  {k}: {num(v)}")
    return lines


def _fit_markdown(p: dict) -> list[str]:
    lines = [
        f"**{p['link']} {p['estimator']}**, n = {p['n']}, converged = {p['converged']} "
        f"after {p['iterations']} iterations (gradient norm {num(p['gradient_norm'])}, "
        f"objective {num(p['objective'])})",
        "",
        "| variable | estimate | std. error | z |",
        "|---|---:|---:|---:|",
    ]
    for c in p["coefficients"]:
        lines.append(f"| {c['name']} | {num(c['estimate'])} | {num(c['std_error'])} | {num(c['z'])} |")
    lines += ["", "| propensity | value |", "|---|---:|"]
    for k, v in p["propensity_summary"].items():
        lines.append(f"| {k} | {num(v)} |")
    return lines


def render_fit(fitted: FittedModel, fmt: str, meta: dict | None = None) -> str:
    payload = {"command": "fit", **(meta or {}), "fit": fit_payload(fitted)}
    if fmt == "json":
        return dumps_json(payload)
    p = payload["fit"]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "estimate", "std_error", "z"])
        for c in p["coefficients"]:
            w.writerow([c["name"], num(c["estimate"]), num(c["std_error"]), num(c["z"])])
        return buf.getvalue()
    if fmt == "markdown":
        return "\n".join(_fit_markdown(p)) + "\n"
    return "\n".join(_meta_text(meta) + _fit_text(p)) + "\n"


def _meta_text(meta: dict | None) -> list[str]:
    return [f"{k}: {v}" for k, v in (meta or {}).items()]


# ---------------------------------------------------------------------------
# specification test
# ---------------------------------------------------------------------------


def spec_test_payload(report, alphas) -> dict:
    boot = report.bootstrap
    tests = []
    for label, stat, pval, idx in (
        ("CvM", boot.stats.cvm, boot.pval_cvm, 0),
        ("KS", boot.stats.ks, boot.pval_ks, 1),
    ):
        tests.append(
            {
                "test": label,
                "statistic": stat,
                "pvalue": pval,
                "critical_values": {num(a): boot.crit[a][idx] for a in alphas},
                "reject": {num(a): bool(boot.reject(a)[idx]) for a in alphas},
            }
        )
    for k in report.kernel:
        tests.append(
            {
                "test": f"T({k.c:.2f})",
                "statistic": k.t,
                "pvalue": k.pval,
                "bandwidth": k.h,
                "critical_values": {num(a): float(norm.ppf(1.0 - a)) for a in alphas},
                "reject": {num(a): bool(k.t > norm.ppf(1.0 - a)) for a in alphas},
            }
        )
    return {
        "B": boot.B,
        "seed": boot.seed,
        "alphas": list(alphas),
        "tests": tests,
    }


def render_test(report, fmt: str, alphas, meta: dict | None = None) -> str:
    payload = {"command": "test", **(meta or {}), **spec_test_payload(report, alphas)}
    payload["fit"] = fit_payload(report.fitted)
    if fmt == "json":
        return dumps_json(payload)
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["test", "statistic", "pvalue"] + [f"crit_{num(a)}" for a in alphas])
        for t in payload["tests"]:
            w.writerow(
                [t["test"], num(t["statistic"]), num(t["pvalue"])]
                + [num(t["critical_values"][num(a)]) for a in alphas]
            )
        return buf.getvalue()
    if fmt == "markdown":
        head = "| test | statistic | p-value | " + " | ".join(f"crit {num(a)}" for a in alphas) + " |"
        lines = [
            f"B = {payload['B']}, seed = {payload['seed']}",
            "",
            head,
            "|---|---:|---:|" + "---:|" * len(alphas),
        ]
        for t in payload["tests"]:
            crit = " | ".join(num(t["critical_values"][num(a)]) for a in alphas)
            lines.append(f"| {t['test']} | {num(t['statistic'])} | {num(t['pvalue'])} | {crit} |")
        lines += [""] + _fit_markdown(payload["fit"])
        return "\n".join(lines) + "\n"
    lines = _meta_text(meta) + [f"B: {payload['B']}", f"seed: {payload['seed']}", "tests:"]
    for t in payload["tests"]:
        crit = " ".join(f"crit[{num(a)}]={num(t['critical_values'][num(a)])}" for a in alphas)
        extra = f" bandwidth={num(t['bandwidth'])}" if "bandwidth" in t else ""
        lines.append(
            f"  {t['test']}: statistic={num(t['statistic'])} pvalue={num(t['pvalue'])}{extra} {crit}"
        )
    lines += _fit_text(payload["fit"])
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# simulation tables
# ---------------------------------------------------------------------------


def table_payload(table, cfg=None) -> dict:
    out = {
        "reps": table.reps,
        "B": table.B,
        "seed": table.seed,
        "rows": [
            {"dgp": r.dgp, "n": r.n, "test": r.test, "alpha": r.alpha, "rate": r.rate, "mcse": r.mcse}
            for r in table.rows
        ],
        "failures": [
            {"dgp": c.dgp, "n": c.n, "counts": dict(sorted(c.failures.items()))}
            for c in table.cells.values()
        ],
    }
    if cfg is not None:
        out["config"] = {
            "dgp": list(cfg.dgps),
            "n": list(cfg.sizes),
            "shaikh_c": list(cfg.shaikh_c),
            "alpha": list(cfg.alphas),
            "link": cfg.link,
            "estimator": cfg.estimator,
            "retries": cfg.retries,
        }
    return out


def render_table(table, fmt: str, cfg=None) -> str:
    if fmt == "json":
        return dumps_json(table_payload(table, cfg))
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dgp", "n", "test", "alpha", "rate", "mcse", "reps", "B", "seed"])
        for r in table.rows:
            w.writerow([r.dgp, r.n, r.test, num(r.alpha), num(r.rate), num(r.mcse), table.reps, table.B, table.seed])
        return buf.getvalue()
    # markdown and text share a pivoted layout: one block per alpha, percentages
    alphas = sorted({r.alpha for r in table.rows})
    tests = list(dict.fromkeys(r.test for r in table.rows))
    cells = list(dict.fromkeys((r.dgp, r.n) for r in table.rows))
    lookup = {(r.dgp, r.n, r.test, r.alpha): r.rate for r in table.rows}
    lines = [f"Proportion of rejections (%), {table.reps} replications, B = {table.B}, seed = {table.seed}", ""]
    for a in alphas:
        lines.append(f"alpha = {num(a)}")
        lines.append("")
        if fmt == "markdown":
            lines.append("| DGP | n | " + " | ".join(tests) + " |")
            lines.append("|---|---:|" + "---:|" * len(tests))
            for dgp, n in cells:
                vals = " | ".join(f"{100 * lookup[(dgp, n, t, a)]:.2f}" for t in tests)
                lines.append(f"| {dgp} | {n} | {vals} |")
        else:
            lines.append("\t".join(["DGP", "n"] + tests))
            for dgp, n in cells:
                lines.append("\t".join([str(dgp), str(n)] + [f"{100 * lookup[(dgp, n, t, a)]:.2f}" for t in tests]))
        lines.append("")
    fails = [c for c in table.cells.values() if c.failures]
    if fails:
        lines.append("Resampled replications:")
        for c in fails:
            lines.append(f"  DGP{c.dgp} n={c.n}: " + ", ".join(f"{k}={v}" for k, v in sorted(c.failures.items())))
    return "\n".join(lines).rstrip("\n") + "\n"


# ---------------------------------------------------------------------------
# ECDF plot data
# ---------------------------------------------------------------------------


def render_ecdf(comp, fmt: str, meta: dict | None = None) -> str:
    if fmt == "json":
        return dumps_json(
            {
                "command": "ecdf",
                **(meta or {}),
                "sup_distance": comp.sup_distance,
                "u": comp.u,
                "ecdf_misspecified": comp.ecdf_misspecified,
                "ecdf_correct": comp.ecdf_correct,
            }
        )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["u", "ecdf_misspecified", "ecdf_correct"])
    for row in zip(comp.u, comp.ecdf_misspecified, comp.ecdf_correct):
        w.writerow([num(v) for v in row])
    return buf.getvalue()
