"""Quadrature grids on the half-line (0, inf).

Dyadic-logarithmic grids keep Littlewood-Paley octaves aligned with grid
octaves, and the power map x -> x**a sends a grid to another grid with the
Jacobian folded into the weights.  Uniform midpoint grids are provided for
Hankel-structured work (the fast matvec and the lattice projections).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Grid",
    "log_grid",
    "uniform_grid",
    "power_transform",
    "integrate",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Abscissae and positive weights of a truncated quadrature rule.

    ``kind`` is one of ``"dyadic"``, ``"uniform"``, ``"power"`` or
    ``"custom"``; ``meta`` records the construction parameters.
    """

    points: np.ndarray
    weights: np.ndarray
    kind: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        x = _readonly(self.points)
        w = _readonly(self.weights)
        if x.ndim != 1 or w.shape != x.shape:
            raise ValueError(
                f"points and weights must be 1-d of equal length, got {x.shape} and {w.shape}"
            )
        if x.size == 0:
            raise ValueError("empty grid")
        if not (np.all(np.isfinite(x)) and np.all(x > 0)):
            raise ValueError("grid points must be finite and positive")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if not (np.all(np.isfinite(w)) and np.all(w > 0)):
            raise ValueError("grid weights must be finite and positive")
        object.__setattr__(self, "points", x)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "meta", dict(self.meta))

    def __len__(self) -> int:
        return self.points.size

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    @property
    def j_min(self) -> Optional[int]:
        return self.meta.get("j_min")

    @property
    def j_max(self) -> Optional[int]:
        return self.meta.get("j_max")

    @property
    def ppo(self) -> Optional[int]:
        return self.meta.get("ppo")

    def same_as(self, other: "Grid") -> bool:
        return (
            len(self) == len(other)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
        )

    def describe(self) -> str:
        return (
            f"{self.kind} grid: {len(self)} points on "
            f"[{self.points[0]:.6g}, {self.points[-1]:.6g}], "
            f"sum(weights) = {self.weights.sum():.12g}"
        )


def log_grid(j_min: int, j_max: int, ppo: int) -> Grid:
    """Dyadic grid ``x_k = 2**(j_min + k/ppo)`` with log-trapezoid weights.

    The weights are ``h*x_k`` with ``h = ln2/ppo``, halved at both ends, so
    the rule integrates ``1/t`` exactly.
    """
    if int(j_min) != j_min or int(j_max) != j_max or int(ppo) != ppo:
        raise ValueError("j_min, j_max and ppo must be integers")
    j_min, j_max, ppo = int(j_min), int(j_max), int(ppo)
    if j_min >= j_max:
        raise ValueError(f"need j_min < j_max, got {j_min} >= {j_max}")
    if ppo <= 0:
        raise ValueError(f"points per octave must be positive, got {ppo}")
    k = np.arange((j_max - j_min) * ppo + 1)
    x = np.exp2(j_min + k / ppo)
    h = math.log(2.0) / ppo
    w = h * x
    w[0] *= 0.5
    w[-1] *= 0.5
    return Grid(x, w, kind="dyadic", meta={"j_min": j_min, "j_max": j_max, "ppo": ppo})


def uniform_grid(lo: float, hi: float, n: int) -> Grid:
    """Midpoint rule with ``n`` cells on ``(lo, hi]``; ``lo`` may be 0."""
    n = int(n)
    if n <= 0:
        raise ValueError(f"need n >= 1 cells, got {n}")
    if not (0 <= lo < hi and math.isfinite(hi)):
        raise ValueError(f"need 0 <= lo < hi < inf, got ({lo}, {hi})")
    h = (hi - lo) / n
    x = lo + (np.arange(n) + 0.5) * h
    return Grid(x, np.full(n, h), kind="uniform", meta={"lo": lo, "hi": hi, "n": n, "step": h})


def power_transform(g: Grid, a: float) -> Grid:
    """Image of ``g`` under ``u = x**a`` (a > 0), weights ``a*x**(a-1)*w``.

    Sums over the new grid equal the substituted sums over the old one
    term by term.
    """
    a = float(a)
    if not a > 0:
        raise ValueError(f"power must be positive, got {a}")
    if a == 1.0:
        return g
    x = g.points
    meta = {"base": g.kind, "power": a, **{f"base_{k}": v for k, v in g.meta.items()}}
    return Grid(x**a, a * x ** (a - 1.0) * g.weights, kind="power", meta=meta)


def integrate(g: Grid, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """``sum_i w_i f(x_i)``; raises on a non-finite sample."""
    vals = np.broadcast_to(np.asarray(f(g.points), dtype=float), g.points.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise FloatingPointError(
            f"integrand not finite at x = {g.points[i]!r} (index {i}): {vals[i]!r}"
        )
    return float(np.dot(g.weights, vals))
