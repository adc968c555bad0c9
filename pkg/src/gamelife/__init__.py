"""Lifecycle analytics for online game populations: curve fitting, critical mass, collapse and preservation."""

__version__ = "0.1.0"
