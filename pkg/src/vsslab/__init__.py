"""Sliding-mode and sliding-mode multimodel control laboratory for a linear AUV depth model."""

__version__ = "0.1.0"
