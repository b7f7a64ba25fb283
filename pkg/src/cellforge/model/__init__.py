"""Constraint-model IR and the layout-synthesis encoder."""
from .ir import Constraint, ConstraintModel, ModelError, model_from_text, model_to_text

__all__ = ["Constraint", "ConstraintModel", "ModelError", "model_from_text", "model_to_text"]
