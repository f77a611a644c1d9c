"""Static figures and plot-ready tables for a verification report.

Figures are rendered off-screen (Agg backend) into files next to the report;
nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .report import VerificationReport, write_series_csv  # noqa: E402

STYLE = {
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "svg.hashsalt": "finslerkit",
}

# residuals of exactly zero are drawn at this floor on the log axis
LOG_FLOOR = 1e-18

_AXES = {
    "flag_curvature": ("sample", "K", "Flag curvature of random flags"),
    "hessian": ("sample", "residual", "Horizontal Hessian residual per point"),
    "rho_series": ("t", "residual", "rho'' + K rho - B along a radial geodesic"),
    "torsion_series": ("t", "A", "Transported Cartan torsion A(t)"),
    "focusing_profile": ("s", "spread", "Spread of radial geodesics"),
}


def residual_chart(report: VerificationReport, path) -> Path:
    """Bar chart of max residual per record against its tolerance (log scale)."""
    recs = report.records
    labels = [f"{r.suite}: {r.tag}" for r in recs]
    vals = np.array([max(r.max_residual, LOG_FLOOR) if np.isfinite(r.max_residual) else 1e6 for r in recs])
    colors = ["tab:green" if r.passed else "tab:red" for r in recs]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(7.0, 0.28 * max(len(recs), 4) + 1.2))
        pos = np.arange(len(recs))
        ax.barh(pos, vals, color=colors, left=LOG_FLOOR)
        for p, r in zip(pos, recs):
            if r.tolerance is not None and r.tolerance > 0:
                ax.plot([r.tolerance, r.tolerance], [p - 0.4, p + 0.4], color="k", lw=1.2)
        ax.set_xscale("log")
        ax.set_yticks(pos)
        ax.set_yticklabels(labels)
        ax.invert_yaxis()
        ax.set_xlabel("max residual (black tick: tolerance)")
        ax.set_title(f"suite {report.suite}: {'PASS' if report.passed else 'FAIL'}")
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return Path(path)


def series_plot(name: str, columns, rows, path) -> Path:
    data = np.array(rows, dtype=float).reshape(len(rows), len(columns))
    xcol, ycol, title = _AXES.get(name, (columns[0], columns[-1], name))
    xi, yi = columns.index(xcol), columns.index(ycol)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        marker = "." if xcol == "sample" else None
        ax.plot(data[:, xi], data[:, yi], marker=marker, lw=0 if marker else 1.2, ms=3)
        ax.set_xlabel(xcol)
        ax.set_ylabel(ycol)
        ax.set_title(title)
        fig.tight_layout()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return Path(path)


def render_report(report: VerificationReport, directory, stem: str = "report") -> list:
    """Write ``<stem>.checks.png`` plus a CSV and a PNG per series table."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = []
    if report.records:
        out.append(residual_chart(report, directory / f"{stem}.checks.png"))
    for name in sorted(report.tables):
        columns, rows = report.tables[name]
        out.append(write_series_csv(columns, rows, directory / f"{stem}.{name}.csv"))
        if rows:
            out.append(series_plot(name, list(columns), rows, directory / f"{stem}.{name}.png"))
    return out
