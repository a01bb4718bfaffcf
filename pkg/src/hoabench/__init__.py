"""Benchmark synthesis and evaluation for temporal reasoning over
finite-state controllers in HOA format."""

__version__ = "0.1.0"
