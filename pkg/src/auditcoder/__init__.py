"""Semi-automated audit-code suggestion for neurosurgical admission notes."""

__version__ = "0.1.0"
