"""Bound versus auxiliary degree, with an optional best-known-average line.

    ergobound-plot-convergence SUMMARY.csv [--reference VALUE] [--out FIG.png]
"""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .dataio import read_summary_csv  # noqa: E402


def plot_convergence(summary_path, reference=None, out_path="convergence.png",
                     title=None) -> str:
    degrees, bounds = read_summary_csv(summary_path)
    if degrees.size == 0:
        raise ValueError(f"{summary_path}: no usable rows")

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.plot(degrees, bounds, "o-", color="tab:blue", label="upper bound")
    if reference is not None and degrees.size >= 1:
        ax.axhline(reference, color="black", linestyle="--", linewidth=1.0,
                   label=f"orbit average {reference:g}")
    ax.set_xlabel("auxiliary polynomial degree")
    ax.set_ylabel("bound")
    ax.set_xticks(list(degrees))
    if title:
        ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("summary", help="bound summary CSV")
    parser.add_argument("--reference", type=float, default=None,
                        help="horizontal reference line (best known orbit average)")
    parser.add_argument("--out", default="convergence.png")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)
    try:
        out = plot_convergence(args.summary, args.reference, args.out, args.title)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
