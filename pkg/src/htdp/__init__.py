"""Private stochastic convex optimization with heavy-tailed gradients."""

__version__ = "0.1.0"
