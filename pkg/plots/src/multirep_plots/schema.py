"""The published sweep CSV schema and its validation.

One row per sweep point.  Numeric columns may be empty when not applicable
(connectivity fields for fully wired networks, stabilization times for
feed-forward runs).
"""

from __future__ import annotations

import sys

import pandas as pd

CSV_COLUMNS = [
    "kind", "l", "k", "m", "q", "zeta", "a", "a1", "a2", "m1", "m2", "r1", "r2",
    "trials", "failures", "rate", "ci_lo", "ci_hi", "delta_exact", "delta_paper_style",
    "bound_satisfied", "nonfire_violations", "mean_fired_fraction", "first_stable_time_p95",
]

NUMERIC = [
    "l", "k", "m", "q", "zeta", "a", "a1", "a2", "m1", "m2", "r1", "r2",
    "trials", "failures", "rate", "ci_lo", "ci_hi", "delta_exact",
    "delta_paper_style", "nonfire_violations", "mean_fired_fraction",
    "first_stable_time_p95",
]

SCHEMA_EXIT = 2


class SchemaError(ValueError):
    pass


def load_sweep(path: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise SchemaError(f"CSV not found: {path}")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"CSV is empty: {path}")
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise SchemaError(f"CSV missing schema columns: {missing}")
    extra = [c for c in frame.columns if c not in CSV_COLUMNS]
    if extra:
        raise SchemaError(f"CSV has unknown columns: {extra}")
    for col in NUMERIC:
        try:
            frame[col] = pd.to_numeric(frame[col])
        except (ValueError, TypeError):
            raise SchemaError(f"column {col!r} is not numeric")
    return frame


def exit_on_schema_error(fn):
    """CLI wrapper: schema violations exit 2, data problems exit 1."""

    def wrapped() -> int:
        try:
            return fn()
        except SchemaError as e:
            sys.stderr.write(f"schema error: {e}\n")
            return SCHEMA_EXIT
        except ValueError as e:
            sys.stderr.write(f"error: {e}\n")
            return 1

    return wrapped
