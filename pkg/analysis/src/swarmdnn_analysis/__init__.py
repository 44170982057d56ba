"""Offline figure rendering for swarmdnn result CSVs."""

__version__ = "0.1.0"
