"""Open-loop Pareto-Nash equilibria of interval differential games."""

__version__ = "0.1.0"
