"""Overlay residual traces along one orbit period, one line per certificate.

    ergobound-plot-trace TRACE.csv [TRACE.csv ...] [--out FIG.png] [--logy]
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .dataio import read_trace_csv  # noqa: E402

STYLES = [":", "--", "-", "-."]


def plot_trace(trace_paths, out_path="trace.png", logy=False, title=None) -> str:
    traces = [read_trace_csv(p) for p in trace_paths]
    if not traces:
        raise ValueError("at least one trace file is required")

    base_t = traces[0].t
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for i, trace in enumerate(traces):
        t, values = trace.t, trace.values
        if t.shape != base_t.shape or not np.allclose(t, base_t):
            print(f"note: resampling {trace.label!r} onto the first trace's grid",
                  file=sys.stderr)
            values = np.interp(base_t, t, values)
            t = base_t
        ax.plot(t, values, STYLES[i % len(STYLES)], label=trace.label, linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("time along orbit")
    ax.set_ylabel("bound residual")
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("traces", nargs="+", help="trace CSV files")
    parser.add_argument("--out", default="trace.png")
    parser.add_argument("--logy", action="store_true")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        out = plot_trace(args.traces, args.out, args.logy, args.title)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
