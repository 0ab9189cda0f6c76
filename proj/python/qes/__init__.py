"""Polynomial (truncated series) and direct numerical solutions of a radial eigenproblem."""

from ._qes import *  # noqa: F401,F403
from ._qes import __doc__  # noqa: F401

__version__ = "0.1.0"
