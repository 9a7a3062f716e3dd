"""Comparison figures for multirep sweep CSVs: empirical failure rates with
confidence bands against the analytic bound curves, and stabilization-time
histograms for lateral runs.

These scripts never recompute statistics; they render exactly what the CSV
says.  The CSV schema is the only coupling to the simulator.
"""

__version__ = "0.1.0"
