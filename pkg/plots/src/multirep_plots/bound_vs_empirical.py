"""Empirical failure rate with its confidence band against both analytic
bound curves, as a function of one sweep axis.  Writes SVG and PNG side by
side."""

from __future__ import annotations

import argparse
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .schema import exit_on_schema_error, load_sweep

AXES = ("m", "q", "zeta", "a")
LOG_FLOOR = 1e-10  # keeps zero rates visible on the log scale


def output_paths(out: str) -> tuple[str, str]:
    base, ext = os.path.splitext(out)
    if ext.lower() not in (".svg", ".png", ""):
        base = out
    return base + ".svg", base + ".png"


def render(frame, axis: str, out: str) -> list[str]:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    rows = frame.dropna(subset=[axis]).sort_values(axis)
    if rows.empty:
        raise ValueError(f"no rows carry a value for axis {axis!r}")
    x = rows[axis].to_numpy()
    rate = rows["rate"].to_numpy().clip(min=LOG_FLOOR)
    ci_lo = rows["ci_lo"].to_numpy().clip(min=LOG_FLOOR)
    ci_hi = rows["ci_hi"].to_numpy().clip(min=LOG_FLOOR)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.fill_between(x, ci_lo, ci_hi, alpha=0.25, color="tab:blue", label="95% CI (Wilson)")
    ax.plot(x, rate, "o-", color="tab:blue", label="empirical failure rate")
    ax.plot(x, rows["delta_exact"].to_numpy().clip(min=LOG_FLOOR), "s--",
            color="tab:red", label="bound (exact coefficients)")
    ax.plot(x, rows["delta_paper_style"].to_numpy().clip(min=LOG_FLOOR), "^:",
            color="tab:orange", label="bound (simplified coefficients)")
    ax.set_yscale("log")
    ax.set_xlabel(axis)
    ax.set_ylabel("recognition failure probability")
    kinds = ", ".join(sorted(rows["kind"].unique()))
    ax.set_title(f"failure rate vs bound ({kinds})")
    ax.grid(True, which="both", alpha=0.3)
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
    parser.add_argument("--axis", required=True, choices=AXES, help="sweep axis on x")
    parser.add_argument("--out", required=True, help="output path; .svg and .png are written")
    args = parser.parse_args()
    written = render(load_sweep(args.csv), args.axis, args.out)
    print("\n".join(written))
    return 0


if __name__ == "__main__":
    sys.exit(main())
