"""Deterministic bilateral-teleoperation simulator."""

from _telesim import *  # noqa: F401,F403
from _telesim import __doc__  # noqa: F401

__version__ = "0.1.0"
