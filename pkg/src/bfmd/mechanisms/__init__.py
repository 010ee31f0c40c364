"""Mechanism catalog and the run entry point."""
from .core import Context, MechanismError, MechParams, Outcome, RandomTape, vcg_payments
from .registry import CONTROLS, EXPECTATION, REGISTRY, UNIVERSAL, get_spec, resolve_params, run_mechanism, tape_space

__all__ = ["Context", "MechanismError", "MechParams", "Outcome", "RandomTape", "vcg_payments",
           "CONTROLS", "EXPECTATION", "REGISTRY", "UNIVERSAL", "get_spec", "resolve_params",
           "run_mechanism", "tape_space"]
