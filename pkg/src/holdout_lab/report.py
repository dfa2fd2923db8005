"""Delimited output, JSON mirrors, run manifests, and curve figures."""

import csv
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set before pyplot)

# stable element ids make the SVG output reproducible byte for byte
matplotlib.rcParams["svg.hashsalt"] = "holdout-lab"


def format_cell(value) -> str:
    """Render one CSV cell: full-precision floats, empty string for None."""
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path, header, rows) -> None:
    """Write rows (sequences matching header) with '\\n' line endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def write_json(path, header, rows) -> None:
    """JSON mirror of a CSV table: a list of {column: value} objects."""
    payload = [dict(zip(header, row)) for row in rows]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce an output file."""

    command: str
    params: dict
    seed: int | None
    version: str
    timestamp: str
    outputs: list


def write_manifest(path, command, params, seed, version, outputs) -> RunManifest:
    manifest = RunManifest(
        command=command,
        params={k: v for k, v in sorted(params.items())},
        seed=seed,
        version=version,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        outputs=[str(x) for x in outputs],
    )
    with open(path, "w") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def save_curve_figure(path, k, series, band=None, title=None) -> None:
    """Render error curves against the split ratio k (log axis).

    series maps labels to value sequences aligned with k; None entries are
    skipped.  band is an optional (low, high) pair shading a confidence
    region.  The format follows the file suffix (SVG by default elsewhere).
    """
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if band is not None:
        lo, hi = band
        ax.fill_between(k, lo, hi, alpha=0.25, linewidth=0, label="95% CI")
    for name, values in series.items():
        pts = [(x, v) for x, v in zip(k, values) if v is not None]
        if not pts:
            continue
        xs, ys = zip(*pts)
        marker = "o" if name == "mc_mean" else None
        ax.plot(xs, ys, marker=marker, markersize=3, label=name)
    ax.set_xscale("log")
    ax.set_xlabel("k = t / t_out")
    ax.set_ylabel("expected Frobenius error")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    if str(path).endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)
    plt.close(fig)


def save_scatter_figure(path, x, y, xlabel, ylabel, title=None) -> None:
    """Scatter of paired values with the identity line for reference."""
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.scatter(x, y, s=12, alpha=0.7)
    if x:
        lo = min(min(x), min(y))
        hi = max(max(x), max(y))
        ax.plot([lo, hi], [lo, hi], linestyle="--", linewidth=1, color="gray")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    if str(path).endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path)
    plt.close(fig)


def figure_path(out_path) -> str:
    """Default figure path next to a CSV output."""
    return str(Path(out_path).with_suffix(".svg"))
