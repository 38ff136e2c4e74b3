"""Retrospective cost attitude estimation on SO(3), with an MEKF baseline."""

__version__ = "0.1.0"
