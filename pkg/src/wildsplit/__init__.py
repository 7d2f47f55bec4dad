"""Leakage-free train/test splits and open-set evaluation for animal re-id."""

__version__ = "0.1.0"
