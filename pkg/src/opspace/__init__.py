"""Finite-truncation laboratory for the operator spaces X(A) inside R (+) C."""

__version__ = "0.1.0"
