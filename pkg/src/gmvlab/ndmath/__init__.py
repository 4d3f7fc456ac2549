"""Numerical substrate: tape autodiff, MLPs, Adam, symmetric eigensolver.

Everything operates on float64 numpy arrays (row-major), single threaded
and deterministic: identical inputs give bitwise-identical outputs.
"""

from .adam import AdamState, adam_step
from .eig import symmetric_eig
from .mlp import Mlp, forward_mlp
from .tape import Tape, Var, add, affine, backward, exp, log, mul, neg, slice_cols, square, tanh, vsum

__all__ = [
    "AdamState",
    "adam_step",
    "symmetric_eig",
    "Mlp",
    "forward_mlp",
    "Tape",
    "Var",
    "add",
    "affine",
    "backward",
    "exp",
    "log",
    "mul",
    "neg",
    "slice_cols",
    "square",
    "tanh",
    "vsum",
]
