"""Numerical toolkit for finite-round quantum interaction strategies.

Subpackages cover dense tensor-factored linear algebra, a super-operator-form
semidefinite solver, round-based strategy representations, zero-sum game
values, strategy distance norms, and multi-party local-operation certificates,
plus a JSON-speaking command-line interface.
"""

__version__ = "0.1.0"

from . import games, linalg, localops, norms, sdp, serialize, strategies  # noqa: F401
