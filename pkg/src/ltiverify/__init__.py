"""Data-driven verification of safety formulas for LTI systems with unknown output maps."""

__version__ = "0.1.0"
