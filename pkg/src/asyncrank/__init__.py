"""Synchronous and asynchronous PageRank over partitioned web graphs."""

__version__ = "0.1.0"
