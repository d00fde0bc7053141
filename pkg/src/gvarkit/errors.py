"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: data and configuration problems
exit 2, identification failures exit 3, numerical failures exit 4.
"""
from __future__ import annotations


class DataError(ValueError):
    """Invalid input data, metadata, or configuration."""


class NumericalError(RuntimeError):
    """A numerical precondition failed (rank deficiency, ill conditioning, non-PD)."""


class IdentificationError(RuntimeError):
    """No structural draw satisfied the magnitude restrictions."""
