"""Render residual panels from the emitted CSV data to PNG files.

The panel CSVs are the primary artifact; figures are a convenience for eyes.
Uses the Agg backend so rendering works headless.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import InputError  # noqa: E402

_STYLE = {"cpgd_invk": "tab:red", "cpgd_fixed": "tab:blue",
          "acpgd_fixed": "black", "pgd_invk": "tab:red",
          "pgd_fixed": "tab:blue", "apgd_fixed": "black"}


def _color_for(name: str):
    for prefix, color in _STYLE.items():
        if name.startswith(prefix):
            return color
    return None


def render_panel(csv_path, png_path, title: str | None = None) -> Path:
    """Log-scale residual plot of one panel CSV (columns: k, then series)."""
    csv_path = Path(csv_path)
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0][0] != "k":
        raise InputError(f"{csv_path} is not a panel CSV")
    header = rows[0]
    data = [[float(v) for v in row] for row in rows[1:]]
    ks = [row[0] for row in data]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for col, name in enumerate(header[1:], start=1):
        ax.semilogy([row[0] for row in data], [row[col] for row in data],
                    label=name, color=_color_for(name), linewidth=1.2)
    ax.set_xlabel("iteration k")
    ax.set_ylabel("relative optimality gap")
    ax.set_title(title or csv_path.stem)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    png_path = Path(png_path)
    fig.savefig(png_path, dpi=150)
    plt.close(fig)
    return png_path


def render_all_panels(data_dir) -> list[Path]:
    """Render every panel_*.csv in a directory next to the data."""
    data_dir = Path(data_dir)
    out = []
    for csv_path in sorted(data_dir.glob("panel_*.csv")):
        out.append(render_panel(csv_path, csv_path.with_suffix(".png")))
    return out
