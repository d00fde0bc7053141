"""CSV and SVG artifact writers.

SVG output is kept byte-reproducible: a fixed hash salt, no creation
date, and the non-interactive backend. Floats in CSVs use repr so
artifacts round-trip exactly.
"""
from __future__ import annotations

import csv
import json

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "gvarkit"

import matplotlib.pyplot as plt
import numpy as np

from .gvar import AutocorrResult, CompanionSpectrum
from .inference import FTestResult
from .irf import BootstrapResult, Decomposition, IrfSet


def write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _save_svg(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _split_label(label: str) -> tuple[str, str]:
    country, _, name = label.partition(".")
    return country, name


def write_irf_csv(path: str, irfs: IrfSet) -> None:
    """Long-format responses: one row per (shock, response, horizon)."""
    pct = int(round((irfs.coverage or 0.0) * 100))
    lo_name, hi_name = f"lo{pct}", f"hi{pct}"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "shock_country",
                "shock_type",
                "response_country",
                "response_variable",
                "horizon",
                "median",
                lo_name,
                hi_name,
            ]
        )
        for j, shock in enumerate(irfs.shock_labels):
            sc, st = _split_label(shock)
            for i, resp in enumerate(irfs.response_labels):
                rc, rv = _split_label(resp)
                for h in range(irfs.responses.shape[0]):
                    row = [sc, st, rc, rv, h, repr(float(irfs.responses[h, i, j]))]
                    if irfs.lower is not None:
                        row.append(repr(float(irfs.lower[h, i, j])))
                        row.append(repr(float(irfs.upper[h, i, j])))
                    else:
                        row.extend(["", ""])
                    writer.writerow(row)


def plot_irf_svg(outdir: str, irfs: IrfSet) -> list[str]:
    """One SVG per (shock, response) pair."""
    paths = []
    horizons = np.arange(irfs.responses.shape[0])
    for j, shock in enumerate(irfs.shock_labels):
        for i, resp in enumerate(irfs.response_labels):
            fig, ax = plt.subplots(figsize=(5, 3))
            if irfs.lower is not None:
                ax.fill_between(
                    horizons,
                    irfs.lower[:, i, j],
                    irfs.upper[:, i, j],
                    alpha=0.3,
                    color="tab:blue",
                    linewidth=0,
                )
            ax.plot(horizons, irfs.responses[:, i, j], color="tab:blue")
            ax.axhline(0.0, color="black", linewidth=0.6)
            ax.set_xlabel("months")
            ax.set_title(f"{resp} to {shock} shock", fontsize=10)
            fig.tight_layout()
            path = f"{outdir}/irf_{shock}__{resp}.svg"
            _save_svg(fig, path)
            paths.append(path)
    return paths


def write_success_json(path: str, result: BootstrapResult) -> None:
    write_json(
        path,
        {
            "replications": result.n_replications,
            "max_draws": result.max_draws,
            "accepted_total": int(sum(result.accepted_per_rep)),
            "success_rate": result.success_rate,
            "replication_success_rate": result.replication_success_rate,
        },
    )


def write_decomposition_csv(path: str, decomp: Decomposition) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "shock_country",
                "shock_type",
                "response_country",
                "response_variable",
                "window",
                "total_peak",
                "direct_peak",
                "spillover",
            ]
        )
        for j, shock in enumerate(decomp.shock_labels):
            sc, st = _split_label(shock)
            for i, resp in enumerate(decomp.response_labels):
                rc, rv = _split_label(resp)
                writer.writerow(
                    [
                        sc,
                        st,
                        rc,
                        rv,
                        decomp.window,
                        repr(float(decomp.total_peak[i, j])),
                        repr(float(decomp.direct_peak[i, j])),
                        repr(float(decomp.spillover[i, j])),
                    ]
                )


def plot_decomposition_svg(path: str, decomp: Decomposition) -> None:
    """Stacked bars of direct and spillover peak effects per shock."""
    n_shocks = len(decomp.shock_labels)
    fig, axes = plt.subplots(
        n_shocks, 1, figsize=(max(6, 0.45 * len(decomp.response_labels)), 3 * n_shocks),
        squeeze=False,
    )
    xs = np.arange(len(decomp.response_labels))
    for j, shock in enumerate(decomp.shock_labels):
        ax = axes[j, 0]
        direct = decomp.direct_peak[:, j]
        spill = decomp.spillover[:, j]
        ax.bar(xs, direct, label="direct", color="tab:blue")
        ax.bar(xs, spill, bottom=direct, label="spillover", color="tab:orange")
        ax.axhline(0.0, color="black", linewidth=0.6)
        ax.set_xticks(xs)
        ax.set_xticklabels(decomp.response_labels, rotation=90, fontsize=7)
        ax.set_title(f"peak effects of {shock} shock", fontsize=10)
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save_svg(fig, path)


def write_shocks_csv(path: str, dates, shocks: np.ndarray, labels) -> None:
    """Long-format recovered shock series."""
    shocks = np.asarray(shocks, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "country", "shock_type", "value"])
        for j, label in enumerate(labels):
            country, name = _split_label(label)
            for t, date in enumerate(dates):
                writer.writerow([date, country, name, repr(float(shocks[t, j]))])


def plot_shock_hist_svg(path: str, shocks: np.ndarray, labels) -> None:
    shocks = np.asarray(shocks, dtype=float)
    fig, axes = plt.subplots(1, len(labels), figsize=(4 * len(labels), 3), squeeze=False)
    for j, label in enumerate(labels):
        ax = axes[0, j]
        ax.hist(shocks[:, j], bins=30, color="tab:blue", alpha=0.8)
        ax.set_title(f"{label} shocks", fontsize=10)
    fig.tight_layout()
    _save_svg(fig, path)


def write_ftest_csv(path: str, results: list[FTestResult]) -> None:
    """Country-by-equation grid with stars marking 5 percent rejections."""
    by_country: dict[str, dict[str, FTestResult]] = {}
    equations: list[str] = []
    for r in results:
        by_country.setdefault(r.country, {})[r.equation] = r
        if r.equation not in equations:
            equations.append(r.equation)
    header = ["country"]
    for eq in equations:
        header.extend([f"{eq}_f", f"{eq}_crit", f"{eq}_df", f"{eq}_sig"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for country, rows in by_country.items():
            line = [country]
            for eq in equations:
                r = rows.get(eq)
                if r is None:
                    line.extend(["", "", "", ""])
                else:
                    line.extend(
                        [
                            f"{r.f_stat:.4f}",
                            f"{r.critical_5pct:.4f}",
                            f"({r.df_num}, {r.df_den})",
                            "*" if r.reject else "",
                        ]
                    )
            writer.writerow(line)


def write_eigenvalues_csv(path: str, spectrum: CompanionSpectrum) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "modulus"])
        for lam in spectrum.eigenvalues:
            writer.writerow(
                [repr(float(lam.real)), repr(float(lam.imag)), repr(float(abs(lam)))]
            )


def plot_eigenvalues_svg(path: str, spectrum: CompanionSpectrum) -> None:
    fig, ax = plt.subplots(figsize=(4, 4))
    angle = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(angle), np.sin(angle), color="black", linewidth=0.6)
    ax.scatter(
        spectrum.eigenvalues.real, spectrum.eigenvalues.imag, s=12, color="tab:blue"
    )
    ax.set_aspect("equal")
    ax.set_title(f"companion eigenvalues (max modulus {spectrum.max_modulus:.4f})", fontsize=9)
    fig.tight_layout()
    _save_svg(fig, path)


def write_autocorr_csv(path: str, result: AutocorrResult, labels) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lag"] + list(labels) + ["band"])
        for lag in range(result.acf.shape[0]):
            writer.writerow(
                [lag]
                + [repr(float(v)) for v in result.acf[lag]]
                + [repr(float(result.band))]
            )
