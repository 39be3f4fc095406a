"""Canonical forms and stability evidence for parametric ODE systems."""

import json

from . import _lyacanon
from ._lyacanon import (
    Error,
    bundled_example_text,
    differentiate,
    evaluate,
    integrate_curve,
    parse_print,
    simplify,
)

__all__ = [
    "Error",
    "bundled_example_text",
    "canonize",
    "differentiate",
    "evaluate",
    "integrate_curve",
    "parse_print",
    "reproduce",
    "simplify",
    "stability",
    "validate",
]


def validate(path=None):
    """Integral validation report of a system file (default: bundled example)."""
    return json.loads(_lyacanon.validate(path))


def canonize(path=None, seed=0):
    """Canonical form and its verification statistics."""
    return json.loads(_lyacanon.canonize(path, seed))


def stability(path=None, xi_box_scale=1.0):
    """Stability report: criteria, Lyapunov check and region scan."""
    return json.loads(_lyacanon.stability(path, xi_box_scale))


def reproduce(rel_tol=1e-8, abs_tol=1e-10, seed=0):
    """Runs the bundled example end to end; returns the criteria summary."""
    return json.loads(_lyacanon.reproduce(rel_tol, abs_tol, seed))
