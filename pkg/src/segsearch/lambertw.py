"""Real-valued Lambert W on the branches needed for frequency-band bounds.

Only arguments in [-1/e, 0) ever occur here, where both the principal
branch W0 and the lower branch W-1 are real.
"""

from __future__ import annotations

import math

_INV_E = 1.0 / math.e
_TOL = 1e-12
_MAX_ITER = 64


def _halley(x: float, w: float) -> float:
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        if f == 0.0:
            return w
        wp1 = w + 1.0
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= _TOL * (1.0 + abs(w)):
            return w
    return w


def _branch_series(p: float) -> float:
    # expansion around the branch point; p = +-sqrt(2(1+ex))
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 - p * 43.0 / 540.0)))


def lambert_w0(x: float) -> float:
    """Principal branch W0(x) for x in [-1/e, inf)."""
    if x < -_INV_E - 1e-15:
        raise ValueError(f"lambert_w0 undefined for x={x} < -1/e")
    if x == 0.0:
        return 0.0
    if x < -0.25:
        # Halley loses conditioning at the sqrt singularity; the series is
        # more accurate than the iteration can resolve once p is tiny.
        p = math.sqrt(max(0.0, 2.0 * (1.0 + math.e * x)))
        w = _branch_series(p)
        if p < 1e-4:
            return w
    elif x < 1.0:
        w = x * (1.0 - x)
    else:
        lx = math.log(x)
        w = lx - math.log(lx) if lx > 1.0 else lx
    return _halley(x, w)


def lambert_w_minus1(x: float) -> float:
    """Lower branch W-1(x), real only for x in [-1/e, 0)."""
    if not (-_INV_E - 1e-15 <= x < 0.0):
        raise ValueError(f"lambert_w_minus1 requires -1/e <= x < 0, got {x}")
    if x > -0.25:
        # asymptotic guess for x -> 0-
        l1 = math.log(-x)
        l2 = math.log(-l1)
        w = l1 - l2 + l2 / l1
    else:
        p = math.sqrt(max(0.0, 2.0 * (1.0 + math.e * x)))
        w = _branch_series(-p)
        if p < 1e-4:
            return w
    return _halley(x, w)
