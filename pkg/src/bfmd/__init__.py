"""Budget-feasible procurement mechanisms with exact rational auditing."""

__version__ = "0.1.0"
