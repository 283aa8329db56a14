"""Smooth dyadic partition of unity shared by the symbol and besov modules."""

import numpy as np


def rho(x):
    """C-infinity bump ``exp(-1/((x-1/2)(2-x)))`` on (1/2, 2), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = (x > 0.5) & (x < 2.0)
    xi = x[inside]
    out[inside] = np.exp(-1.0 / ((xi - 0.5) * (2.0 - xi)))
    return out


def normalizer(x):
    """``sum_j rho(x / 2**j)``; at most two terms are nonzero for x > 0.

    Only divisions by powers of two are involved, so the sum is exactly
    invariant under ``x -> 2x``.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        k = np.floor(np.log2(np.where(x > 0, x, 1.0)))
    total = np.zeros_like(x)
    for shift in (-1.0, 0.0, 1.0, 2.0):
        total += rho(x / np.exp2(k + shift))
    return total


def v(x):
    """Partition generator: ``supp v = [1/2, 2]`` and ``sum_j v(x/2**j) = 1``."""
    x = np.asarray(x, dtype=float)
    r = rho(x)
    out = np.zeros_like(x)
    nz = r > 0
    out[nz] = r[nz] / normalizer(x[nz])
    return out
