"""Action model toolkit: emulation, equivalence and minimisation of action models."""

from .action import ActionModel, EventPartition, bisim_refine, generated_submodel, reach_sets, regular_version
from .emulation import Verdict, build_theta, check_relation, iterate_emulation, oracle_equivalent
from .formula import (
    BOT,
    TOP,
    And,
    Bot,
    Box,
    Diamond,
    Formula,
    FormulaSyntaxError,
    Implies,
    Not,
    Or,
    Prop,
    Top,
    closure,
    depth,
    parse,
    render,
    single_negation,
)
from .kripke import KripkeModel, canonical_kripke, holds, kripke_bisimilar, product_update
from .solver import Atom, SolverBudgetExceeded, SolverHandle

__all__ = [
    "ActionModel", "Atom", "BOT", "TOP", "And", "Bot", "Box", "Diamond", "EventPartition",
    "Formula", "FormulaSyntaxError", "Implies", "KripkeModel", "Not", "Or", "Prop",
    "SolverBudgetExceeded", "SolverHandle", "Top", "Verdict", "bisim_refine", "build_theta",
    "canonical_kripke", "check_relation", "closure", "depth", "generated_submodel", "holds",
    "iterate_emulation", "kripke_bisimilar", "oracle_equivalent", "parse", "product_update",
    "reach_sets", "regular_version", "render", "single_negation",
]
