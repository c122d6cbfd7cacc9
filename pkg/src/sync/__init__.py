"""Pairwise temporal synchronization."""
