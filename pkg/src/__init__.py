"""Analyzer for the fractional-order cubic delay equation D^alpha x = delta*x(t-tau) - epsilon*x(t-tau)^3 - p*x^2 + q*x."""

__version__ = "0.1.0"
