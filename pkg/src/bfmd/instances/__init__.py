"""Domain types, class validation, JSON I/O and instance generators."""
from .generators import PHI_SURROGATE, RandomParams, canonical_instance, gen_lower_bound, gen_random
from .io import fstr, instance_to_json, load_instance, parse_instance, save_instance, serialize_instance
from .types import (
    N_MAX_RUN,
    N_MAX_VALIDATE,
    CostClass,
    CostFunction,
    Instance,
    InstanceError,
    Valuation,
    aggregate_costs,
    costs_of,
    frac,
)
from .validation import class_diagnostics, validate_class

__all__ = [
    "PHI_SURROGATE", "RandomParams", "canonical_instance", "gen_lower_bound", "gen_random",
    "fstr", "instance_to_json", "load_instance", "parse_instance", "save_instance", "serialize_instance",
    "N_MAX_RUN", "N_MAX_VALIDATE", "CostClass", "CostFunction", "Instance", "InstanceError", "Valuation",
    "aggregate_costs", "costs_of", "frac", "class_diagnostics", "validate_class",
]
