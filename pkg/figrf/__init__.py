"""FIGRF - Feature-importance-guided random forests with annealed tuning."""

__version__ = "0.1.0"
