"""Hierarchical compound-protein affinity model with masked-distance pre-training."""

__version__ = "0.1.0"
