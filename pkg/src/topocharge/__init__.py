"""Charge-theoretic analysis of translation-invariant 2D stabilizer and subsystem codes."""

from __future__ import annotations

__version__ = "0.1.0"
