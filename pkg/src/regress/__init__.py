"""Kernel regression and bandwidth selection."""
