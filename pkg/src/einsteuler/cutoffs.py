"""Smooth step and bump functions built from ``exp(-1/t)``."""
from __future__ import annotations

import numpy as np


def _f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``."""
    a = _f(t)
    b = _f(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


def plateau(r, inner: float, outer: float):
    """Equal to 1 for ``r <= inner``, 0 for ``r >= outer``, smooth between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - inner) / (outer - inner))


def bump(r, width: float = 1.0):
    """Unnormalized bump ``exp(-1/(1 - (r/width)^2))`` supported in ``r < width``."""
    x = np.asarray(r, dtype=float) / width
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out
