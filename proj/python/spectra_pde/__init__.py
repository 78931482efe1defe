"""Ultraspherical spectral solver for linear PDEs on rectangles."""

from ._core import (
    CompatibilityError,
    IllPosedError,
    ParseError,
    SchemaError,
    Solution,
    SpectraError,
    UnresolvedError,
    solve,
    solve_file,
    solve_ode,
    splitting_rank,
)

__all__ = [
    "CompatibilityError",
    "IllPosedError",
    "ParseError",
    "SchemaError",
    "Solution",
    "SpectraError",
    "UnresolvedError",
    "solve",
    "solve_file",
    "solve_ode",
    "splitting_rank",
]
