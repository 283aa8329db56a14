"""Symbols: functions on (0, inf) that generate Hankel-type kernels.

A symbol is an evaluator rather than a sample array, so each consumer can
sample it at its own resolution.  Symbols with jump discontinuities list
the jump locations; the Fourier code uses them to stay accurate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from . import _partition

__all__ = [
    "Symbol",
    "indicator_phi_n",
    "exp_symbol",
    "bump",
    "power_weight",
    "dilate",
    "zero_symbol",
    "tabulated",
    "parse_symbol",
]


@dataclass(frozen=True)
class Symbol:
    func: Callable[[np.ndarray], np.ndarray]
    support: Optional[Tuple[float, float]] = None
    label: str = ""
    jumps: Tuple[float, ...] = ()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.func(t), dtype=float)
        out = np.broadcast_to(out, t.shape).copy() if out.shape != t.shape else out
        if self.support is not None:
            lo, hi = self.support
            out = np.where((t >= lo) & (t <= hi), out, 0.0)
        return out

    def one_sided(self, c: float) -> Tuple[float, float]:
        """Left and right limits at ``c`` (used for declared jumps)."""
        eps = 1e-12
        left = float(self(np.array([c * (1.0 - eps)]))[0])
        right = float(self(np.array([c * (1.0 + eps)]))[0])
        return left, right

    def is_zero(self) -> bool:
        return self.label == "zero"


def zero_symbol() -> Symbol:
    return Symbol(lambda t: np.zeros_like(t), support=None, label="zero")


def indicator_phi_n(n: int) -> Symbol:
    """Indicator of ``(1, 1 + 2/n]``.

    Strict on the left, closed on the right; the endpoint choice is a
    measure-zero convention that only matters when a grid point lands
    exactly on 1 or 1 + 2/n.
    """
    if int(n) != n or n <= 0:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    right = 1.0 + 2.0 / n

    def f(t):
        return np.where((t > 1.0) & (t <= right), 1.0, 0.0)

    return Symbol(f, support=(1.0, right), label=f"phi_n(n={n})", jumps=(1.0, right))


def exp_symbol() -> Symbol:
    return Symbol(lambda t: np.exp(-t), label="exp")


def bump(lam: float) -> Symbol:
    """``t -> v(t/lam)`` with ``v`` the partition generator; support [lam/2, 2 lam]."""
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"dilation must be positive, got {lam}")
    return Symbol(
        lambda t: _partition.v(t / lam),
        support=(lam / 2.0, 2.0 * lam),
        label=f"bump(lambda={lam:g})",
    )


def power_weight(phi: Symbol, sigma: float) -> Symbol:
    """``t -> t**sigma * phi(t)``; support and jumps are inherited."""
    sigma = float(sigma)
    if sigma == 0.0:
        return phi

    def f(t):
        return t**sigma * phi.func(t)

    return Symbol(f, support=phi.support, label=f"t^{sigma:g}*{phi.label}", jumps=phi.jumps)


def dilate(phi: Symbol, lam: float) -> Symbol:
    """``t -> phi(t/lam)``."""
    lam = float(lam)
    if not lam > 0:
        raise ValueError(f"dilation must be positive, got {lam}")
    support = None if phi.support is None else (phi.support[0] * lam, phi.support[1] * lam)
    return Symbol(
        lambda t: phi.func(t / lam),
        support=support,
        label=f"{phi.label}(./{lam:g})",
        jumps=tuple(c * lam for c in phi.jumps),
    )


def tabulated(nodes: Sequence[float], values: Sequence[float], log: bool = False,
              label: str = "tabulated") -> Symbol:
    """Piecewise-linear symbol through ``(nodes, values)``, zero outside.

    With ``log=True`` the interpolation variable is ``log2 t``.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = np.asarray(values, dtype=float)
    if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size == 0:
        raise ValueError("nodes and values must be 1-d arrays of equal nonzero length")
    if np.any(np.diff(nodes) <= 0):
        raise ValueError("nodes must be strictly increasing")
    xs = np.log2(nodes) if log else nodes
    lo, hi = float(nodes[0]), float(nodes[-1])

    def f(t):
        u = np.log2(np.where(t > 0, t, lo)) if log else t
        return np.interp(u, xs, values, left=0.0, right=0.0)

    # rounding of nodes computed elsewhere (x**a + y**b) must not fall outside
    pad = 1e-12 * max(abs(lo), abs(hi))
    return Symbol(f, support=(lo - pad, hi + pad), label=label)


def parse_symbol(label: str) -> Symbol:
    """Build a symbol from a config string.

    Accepted forms: ``exp``, ``zero``, ``bump:<lambda>``, ``phi_n:<n>``,
    optionally followed by ``*t^<sigma>`` for a power weight.
    """
    text = str(label).strip()
    sigma = None
    if "*t^" in text:
        text, _, s = text.partition("*t^")
        sigma = float(s)
    name, _, arg = text.partition(":")
    name = name.strip()
    try:
        if name == "exp" and not arg:
            phi = exp_symbol()
        elif name == "zero" and not arg:
            phi = zero_symbol()
        elif name == "bump":
            phi = bump(float(arg) if arg else 1.0)
        elif name == "phi_n":
            val = float(arg)
            if not val.is_integer():
                raise ValueError
            phi = indicator_phi_n(int(val))
        else:
            raise ValueError
    except ValueError:
        raise ValueError(
            f"unknown symbol {label!r}; expected exp, zero, bump:<lambda>, phi_n:<n>"
        ) from None
    if sigma is not None:
        phi = power_weight(phi, sigma)
    return phi


def _finite_or_raise(vals: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"symbol not finite {where}")


def support_octaves(phi: Symbol) -> Optional[Tuple[int, int]]:
    """Inclusive range of band indices j whose open band meets the support."""
    if phi.support is None:
        return None
    lo, hi = phi.support
    if hi <= 0:
        return None
    # band j is (2**(j-1), 2**(j+1))
    j_hi = math.ceil(math.log2(hi) + 1) - 1
    j_lo = math.floor(math.log2(lo) - 1) + 1 if lo > 0 else None
    return (j_lo, j_hi)
