"""Hypothesis tests, FDR control, pair sampling and bootstrap analysis."""
