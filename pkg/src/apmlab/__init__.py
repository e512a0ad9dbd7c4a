"""Numerical laboratory for area-preserving maps with quadratic homoclinic tangencies."""

from __future__ import annotations

__version__ = "0.1.0"
