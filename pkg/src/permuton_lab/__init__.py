"""Simulation of longest increasing subsequences for random permutations
sampled from singular pre-permuton densities."""

__version__ = "0.1.0"
