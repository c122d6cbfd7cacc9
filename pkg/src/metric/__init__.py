"""Distances between synchronized signals and the kernels built on them."""
