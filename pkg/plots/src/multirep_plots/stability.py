"""Histogram of lateral-run stabilization times (95th percentile of the first
stable step per sweep point) against the 2*level reference."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .bound_vs_empirical import output_paths
from .schema import exit_on_schema_error, load_sweep


def render(frame, out: str) -> list[str]:
    lateral = frame[frame["kind"] == "lateral"].dropna(subset=["first_stable_time_p95"])
    if lateral.empty:
        raise ValueError("no lateral rows with stabilization times in this CSV")
    times = lateral["first_stable_time_p95"].to_numpy()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    hi = int(max(times.max(), (2 * lateral["l"]).max())) + 2
    ax.hist(times, bins=range(0, hi + 1), color="tab:blue", alpha=0.7, edgecolor="black")
    for lvl in sorted(lateral["l"].unique()):
        ax.axvline(2 * lvl, color="tab:red", linestyle="--", label=f"2*level = {int(2 * lvl)}")
    ax.set_xlabel("first stable time (p95 across trials)")
    ax.set_ylabel("sweep points")
    ax.set_title("lateral stabilization times")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    svg, png = output_paths(out)
    fig.savefig(svg)
    fig.savefig(png, dpi=150)
    plt.close(fig)
    return [svg, png]


@exit_on_schema_error
def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--csv", required=True, help="sweep CSV path")
    parser.add_argument("--out", required=True, help="output path; .svg and .png are written")
    args = parser.parse_args()
    written = render(load_sweep(args.csv), args.out)
    print("\n".join(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
