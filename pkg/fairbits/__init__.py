"""Unbiased random integers from raw bits, and exact bias figures for floor-multiply schemes."""

__version__ = "1.0.0"
