"""Counterfactual explanations for classical models via model-specific optimisation programs."""
from .blackbox import BlackboxObjective, blackbox_counterfactual
from .engine import (
    ConstraintSet,
    CounterfactualQuery,
    CounterfactualReport,
    build_constraints,
    compute_counterfactual,
    counterfactual_program,
    lvq_counterfactual,
)
from .errors import CfxError, InputError, NoCounterfactual
from .models import dump_model, load_model, matches_target, predict, read_model
from .regularizers import Regularizer, eval_regularizer, mad_weights, objective_pieces
from .trees import (
    ensemble_counterfactual_a,
    ensemble_counterfactual_b,
    enumerate_paths,
    path_min_change,
    tree_counterfactual,
)

__all__ = [
    "BlackboxObjective", "blackbox_counterfactual", "ConstraintSet", "CounterfactualQuery",
    "CounterfactualReport", "build_constraints", "compute_counterfactual", "counterfactual_program",
    "lvq_counterfactual",
    "CfxError", "InputError", "NoCounterfactual", "dump_model", "load_model", "matches_target",
    "predict", "read_model", "Regularizer", "eval_regularizer", "mad_weights",
    "objective_pieces", "ensemble_counterfactual_a", "ensemble_counterfactual_b",
    "enumerate_paths", "path_min_change", "tree_counterfactual",
]
