"""Nonlinear programs with probed Jacobian structure."""

from ._core import (
    BoundError,
    DimensionError,
    Error,
    IoError,
    Options,
    ParseError,
    Problem,
    parse_specs,
)

__all__ = [
    "BoundError",
    "DimensionError",
    "Error",
    "IoError",
    "Options",
    "ParseError",
    "Problem",
    "parse_specs",
    "solve_file",
]


def solve_file(path, specs=None, options=None):
    """Parse a problem file (and optional specs file) and solve it."""
    opts = options if options is not None else Options()
    if specs is not None:
        with open(specs) as fh:
            opts = parse_specs(fh.read(), opts)
    return Problem.from_file(path, opts).solve(opts)
