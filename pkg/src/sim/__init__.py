"""Synthetic cohorts and the simulation study."""
