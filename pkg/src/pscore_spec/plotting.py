"""Optional figure rendering for the CLI report paths (Agg backend, files only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "font.size": 9,
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "figure.dpi": 120,
    "svg.hashsalt": "pscore-spec",
}
# pin metadata so repeated renders of the same data are byte-identical
_META = {"png": {"Software": None}, "svg": {"Date": None}, "pdf": {"CreationDate": None}}


def _save(fig, path):
    ext = str(path).rsplit(".", 1)[-1].lower()
    fig.savefig(path, bbox_inches="tight", metadata=_META.get(ext))
    plt.close(fig)


def plot_ecdf(comp, path):
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        ax.step(comp.u, comp.ecdf_misspecified, where="post", color="k", lw=1.0, label="main effects only")
        ax.step(comp.u, comp.ecdf_correct, where="post", color="tab:red", lw=1.0, ls="--", label="with X1*X2")
        ax.set_xlabel("fitted propensity score")
        ax.set_ylabel("ECDF")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.legend(loc="upper left")
        _save(fig, path)


def plot_process(report, path, alpha=0.05):
    """Projected process on its knots with the bootstrap KS band at ``alpha``."""
    proc, boot = report.process, report.bootstrap
    crit = boot.crit[alpha][1] if alpha in boot.crit else None
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.5, 3.2))
        u = np.concatenate([[0.0], proc.u_grid, [1.0]])
        r = np.concatenate([[0.0], proc.rp, [proc.rp[-1]]])
        ax.step(u, r, where="post", color="k", lw=1.0)
        if crit is not None:
            for s in (-1, 1):
                ax.axhline(s * crit, color="tab:red", lw=0.8, ls="--")
        ax.axhline(0.0, color="0.6", lw=0.5)
        ax.set_xlabel("u")
        ax.set_ylabel("projected process")
        _save(fig, path)


def plot_rejections(table, path, alpha=0.05):
    """Rejection rate against n, one panel per DGP."""
    dgps = list(dict.fromkeys(r.dgp for r in table.rows))
    tests = list(dict.fromkeys(r.test for r in table.rows))
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(dgps), figsize=(3.2 * len(dgps), 3.0), squeeze=False)
        for ax, dgp in zip(axes[0], dgps):
            for t in tests:
                rows = [r for r in table.rows if r.dgp == dgp and r.test == t and np.isclose(r.alpha, alpha)]
                ns = [r.n for r in rows]
                ax.plot(ns, [r.rate for r in rows], marker="o", ms=3, lw=1.0, label=t)
            ax.axhline(alpha, color="0.6", lw=0.5, ls=":")
            ax.set_title(f"DGP{dgp}")
            ax.set_xlabel("n")
            ax.set_ylim(-0.02, 1.02)
        axes[0][0].set_ylabel("rejection rate")
        axes[0][-1].legend(loc="best", fontsize=7)
        _save(fig, path)
