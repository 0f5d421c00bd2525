"""Exact simulation and crossing-rate theory for fitness valleys in a
periodically changing environment."""

__version__ = "0.1.0"
