"""Numerical homogenization lab: cell problems, disk solves, doubling indices
and critical points of oscillating elliptic solutions."""

import json

from ._oscilab import (
    BudgetError,
    CoefficientField,
    ConfigError,
    Corrector,
    Error,
    Field,
    LockError,
    Solution,
    config_hash,
    dilated,
    doubling_index,
    families,
    harmonic_polynomial,
    harmonic_reference,
    load_solution,
    normalize,
    solve,
    solve_cell,
)
from . import _oscilab


def doubling_profile(field, x, y, r_top, rungs):
    return json.loads(_oscilab.doubling_profile_json(field, x, y, r_top, rungs))


def critical_points(field, x=0.0, y=0.0, radius=0.5, h=0.0):
    return json.loads(_oscilab.critical_points_json(field, x, y, radius, h))


def run_experiment(config_text, workers=0):
    """Full pipeline on an INI config; returns the results.json document."""
    return json.loads(_oscilab.run_experiment_json(config_text, workers))


def cosine(ell):
    """Boundary coefficients (a, b) of g = cos(ell t)."""
    return [0.0] * ell + [1.0], []
