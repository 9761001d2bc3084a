"""Threshold regression with endogenous sample splitting, bootstrap
threshold tests, state-dependent local projections and IV multipliers."""

__version__ = "0.1.0"
