"""Report serialization: delimited MSE tables, run metadata, figures.

A report directory holds ``mse_series.csv`` (one row per (sigma_w, seed,
method, t)), ``mse_avg.csv`` (per-seed time averages reduced over
seeds), ``run_meta.json`` (config echo, digest, schedule trace), and by
default two rendered figures. The CSV writers are fully deterministic:
fixed column order, fixed row order, fixed float formatting, no
timestamps, newline ``\\n``. Two runs with the same config and seeds
produce byte-identical CSVs; the figures are excluded from that
guarantee (PNG encoding is not contractual).
"""

import json
from pathlib import Path

import numpy as np

from .errors import ContractError

__all__ = ["write_report", "render_figures"]

SERIES_HEADER = "t,method,sigma_w,seed,mse"
AVG_HEADER = "method,sigma_w,mean_mse,std_mse"


def _fmt_sigma(sw):
    # repr round-trips the config literal (0.05 -> "0.05"), keeping the
    # column greppable against the config file
    return repr(float(sw))


def write_report(report, out_dir, figures=True):
    """Write a :class:`~coopkal.harness.RunReport` to ``out_dir``.

    Parameters
    ----------
    report : RunReport
    out_dir : str or Path
        Created if missing.
    figures : bool
        Also render ``mse_over_time.png`` and ``mse_avg.png``.

    Returns
    -------
    dict
        Paths of everything written, keyed by artifact name.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}

    lines = [SERIES_HEADER]
    for sw, seed, t, method, v in report.series:
        lines.append(f"{t},{method},{_fmt_sigma(sw)},{seed},{v:.12e}")
    series_path = out / "mse_series.csv"
    series_path.write_text("\n".join(lines) + "\n")
    paths["series"] = series_path

    lines = [AVG_HEADER]
    for method, sw, mean, std in report.averages:
        lines.append(f"{method},{_fmt_sigma(sw)},{mean:.12e},{std:.12e}")
    avg_path = out / "mse_avg.csv"
    avg_path.write_text("\n".join(lines) + "\n")
    paths["averages"] = avg_path

    meta_path = out / "run_meta.json"
    meta_path.write_text(json.dumps(report.meta, indent=2, sort_keys=True) + "\n")
    paths["meta"] = meta_path

    if figures:
        paths.update(render_figures(report, out))
    return paths


def _series_by_cell(report):
    """{(sigma_w, method): (t array, seed-averaged mse array)} plus key lists."""
    cells = {}
    for sw, seed, t, method, v in report.series:
        cells.setdefault((sw, method), {}).setdefault(t, []).append(v)
    shaped = {}
    for key, per_t in cells.items():
        ts = np.array(sorted(per_t))
        ms = np.array([np.mean(per_t[t]) for t in ts])
        shaped[key] = (ts, ms)
    sigmas = sorted({sw for sw, _ in shaped})
    methods = sorted({m for _, m in shaped})
    return shaped, sigmas, methods


def render_figures(report, out_dir):
    """Render the two report figures; returns their paths.

    ``mse_over_time.png``: seed-averaged per-instant MSE per method, one
    panel per noise level. ``mse_avg.png``: average MSE per method
    grouped by noise level, log scale.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    shaped, sigmas, methods = _series_by_cell(report)
    if not shaped:
        raise ContractError("report has no series to plot")
    paths = {}

    fig, axes = plt.subplots(
        len(sigmas), 1, figsize=(7.0, 2.6 * len(sigmas)), sharex=True, squeeze=False
    )
    for ax, sw in zip(axes[:, 0], sigmas):
        for method in methods:
            ts, ms = shaped[(sw, method)]
            ax.plot(ts, ms, marker=".", markersize=3, linewidth=1.0, label=method)
        ax.set_yscale("log")
        ax.set_ylabel("MSE")
        ax.set_title(f"sigma_w = {_fmt_sigma(sw)}", fontsize=9)
        ax.grid(True, which="both", alpha=0.25)
    axes[-1, 0].set_xlabel("t")
    axes[0, 0].legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    p = out / "mse_over_time.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths["fig_over_time"] = p

    avg = {(m, sw): mean for m, sw, mean, _ in report.averages}
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    width = 0.8 / max(len(methods), 1)
    xs = np.arange(len(sigmas))
    for j, method in enumerate(methods):
        vals = [avg[(method, sw)] for sw in sigmas]
        ax.bar(xs + (j - (len(methods) - 1) / 2) * width, vals, width, label=method)
    ax.set_xticks(xs)
    ax.set_xticklabels([_fmt_sigma(sw) for sw in sigmas])
    ax.set_yscale("log")
    ax.set_xlabel("sigma_w")
    ax.set_ylabel("average MSE")
    ax.grid(True, axis="y", which="both", alpha=0.25)
    ax.legend(fontsize=8)
    fig.tight_layout()
    p = out / "mse_avg.png"
    fig.savefig(p, dpi=110)
    plt.close(fig)
    paths["fig_avg"] = p
    return paths
