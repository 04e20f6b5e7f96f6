"""Small array helpers shared across modules."""

from __future__ import annotations

import numpy as np


def locked_array(values) -> np.ndarray:
    """Copy to a float64 array and make it read-only.

    Frozen dataclasses hold these so instances stay immutable in practice.
    """
    out = np.array(values, dtype=np.float64, copy=True)
    out.setflags(write=False)
    return out
