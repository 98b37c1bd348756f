"""SVG rendering of measure series; a convenience layer over the CSV files.

Output is byte-stable: fixed hash salt for element ids and no embedded
creation date.
"""

from __future__ import annotations

from .io import read_series

_RC = {
    "svg.hashsalt": "oversmooth",
    "svg.fonttype": "none",
}


def plot_series_csv(in_path, out_path, axes: str = "loglog") -> None:
    """Render every series of a CSV to one SVG figure.

    ``axes`` is ``loglog`` (log measure against log layer/time, dropping
    non-positive indices) or ``semilogy`` (log measure against linear index).
    Zero measure values are dropped from log plots.
    """
    if axes not in ("loglog", "semilogy"):
        raise ValueError(f"unknown axes mode {axes!r}")
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = read_series(in_path)
    if not series:
        raise ValueError(f"{in_path}: no series to plot")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7.0, 4.5))
        for s in series:
            keep = s.values > 0
            if axes == "loglog":
                keep &= s.index > 0
            label = f"{s.metadata.get('run_id', '')}:{s.measure_name}"
            ax.plot(s.index[keep], s.values[keep], label=label)
        ax.set_yscale("log")
        if axes == "loglog":
            ax.set_xscale("log")
        ax.set_xlabel("layer / time")
        ax.set_ylabel("measure")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        plt.close(fig)
