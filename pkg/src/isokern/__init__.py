"""Cross-core interference simulator and jitter-aware schedulability analysis."""

__version__ = "0.1.0"
