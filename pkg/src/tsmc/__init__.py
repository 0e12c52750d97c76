"""Type-based sign (TS) molecular communication simulator."""

__version__ = "0.1.0"
