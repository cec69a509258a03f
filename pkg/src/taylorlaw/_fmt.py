"""Fixed-precision numeric formatting shared by the report and plot emitters.

All user-facing numbers are rendered at 12 significant digits so repeated
runs with identical inputs produce byte-identical files.
"""

from __future__ import annotations


def sig12(x: float) -> str:
    """Format a finite float at 12 significant digits."""
    return format(float(x), ".12g")
