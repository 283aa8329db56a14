"""Nystrom matrices of distorted and weighted Hankel kernels.

A kernel ``k`` on grids ``(x_i, w_i)``, ``(y_j, u_j)`` becomes the matrix
``sqrt(w_i) k(x_i, y_j) sqrt(u_j)``, whose singular values approximate
those of the integral operator on L^2(0, inf).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .grid import Grid, power_transform
from .symbol import Symbol

__all__ = [
    "KernelMatrix",
    "DistortedKernel",
    "assemble_kernel",
    "assemble_distorted",
    "assemble_weighted_hankel",
    "distort_kernel",
    "unitary_image",
    "hankel_matvec_fast",
    "HankelOperator",
]


def _pow(x, e):
    return x if e == 1.0 else x**e


@dataclass(frozen=True)
class DistortedKernel:
    """``k(x, y) = x**xw * y**yw * phi(x**alpha + y**beta)``.

    Covers both the distorted kernels (``xw = yw = 0``) and the weighted
    Hankel kernels (``alpha = beta = 1``), and is closed under
    :func:`distort_kernel`.  Exponents equal to 1 skip the power so the
    symbol arguments stay bit-identical across equivalent assemblies.
    """

    phi: Symbol
    alpha: float = 1.0
    beta: float = 1.0
    xw: float = 0.0
    yw: float = 0.0

    def argument(self, x, y):
        return _pow(x, self.alpha) + _pow(y, self.beta)

    def weight(self, x, y):
        wx = 1.0 if self.xw == 0 else x**self.xw
        wy = 1.0 if self.yw == 0 else y**self.yw
        return wx * wy

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return self.weight(x, y) * self.phi(self.argument(x, y))

    @property
    def label(self) -> str:
        parts = [f"phi={self.phi.label}"]
        if (self.alpha, self.beta) != (1.0, 1.0):
            parts.append(f"alpha={self.alpha:g}, beta={self.beta:g}")
        if (self.xw, self.yw) != (0.0, 0.0):
            parts.append(f"a={self.xw:g}, b={self.yw:g}")
        return "kernel(" + ", ".join(parts) + ")"


@dataclass(frozen=True, eq=False)
class KernelMatrix:
    """Entries ``sqrt(w_i) k(x_i, y_j) sqrt(u_j)`` plus provenance."""

    row_grid: Grid
    col_grid: Grid
    entries: np.ndarray
    label: str = ""
    kernel: Optional[Callable] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.shape != (len(self.row_grid), len(self.col_grid)):
            raise ValueError(
                f"entries shape {e.shape} does not match grids "
                f"({len(self.row_grid)}, {len(self.col_grid)})"
            )
        if not np.all(np.isfinite(e)):
            i, j = np.argwhere(~np.isfinite(e))[0]
            raise FloatingPointError(f"non-finite matrix entry at ({i}, {j})")
        e = np.array(e)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def shape(self):
        return self.entries.shape

    def kernel_values(self) -> np.ndarray:
        """Unscaled kernel samples ``k(x_i, y_j)``."""
        return self.entries / np.outer(self.row_grid.sqrt_weights, self.col_grid.sqrt_weights)

    def with_entries(self, entries: np.ndarray, label: str, kernel=None) -> "KernelMatrix":
        return KernelMatrix(self.row_grid, self.col_grid, entries, label, kernel)


def _evaluate(k: Callable, x: np.ndarray, y: np.ndarray, jobs: int) -> np.ndarray:
    def rows(sl):
        return np.asarray(k(x[sl, None], y[None, :]), dtype=float) * np.ones((1, y.size))

    if jobs > 1 and x.size >= 2 * jobs:
        chunks = np.array_split(np.arange(x.size), jobs)
        with ThreadPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(lambda c: rows(slice(c[0], c[-1] + 1)), chunks))
        return np.vstack(parts)
    return rows(slice(None))


def assemble_kernel(k: Callable, gx: Grid, gy: Grid, label: str = "", jobs: int = 1) -> KernelMatrix:
    """Symmetrized Nystrom matrix of an arbitrary vectorized kernel ``k(x, y)``."""
    x, y = gx.points, gy.points
    with np.errstate(all="ignore"):
        vals = _evaluate(k, x, y, jobs)
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        where = f"x = {x[i]!r}, y = {y[j]!r}"
        if hasattr(k, "argument"):
            where += f", symbol argument {float(k.argument(x[i], y[j]))!r}"
        raise FloatingPointError(f"kernel not finite at (i, j) = ({i}, {j}): {where}")
    entries = gx.sqrt_weights[:, None] * vals * gy.sqrt_weights[None, :]
    if not label:
        label = getattr(k, "label", "kernel")
    return KernelMatrix(gx, gy, entries, label, k)


def assemble_distorted(phi: Symbol, alpha: float, beta: float, gx: Grid, gy: Grid,
                       jobs: int = 1) -> KernelMatrix:
    """Matrix of ``phi(x**alpha + y**beta)``; requires alpha, beta > 0."""
    alpha, beta = float(alpha), float(beta)
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"distortion exponents must be positive, got ({alpha}, {beta})")
    k = DistortedKernel(phi, alpha, beta)
    return assemble_kernel(k, gx, gy, f"G[alpha={alpha:g}, beta={beta:g}, phi={phi.label}]", jobs)


def assemble_weighted_hankel(phi: Symbol, a: float, b: float, gx: Grid, gy: Grid,
                             jobs: int = 1) -> KernelMatrix:
    """Matrix of ``x**a y**b phi(x + y)``; any real a, b."""
    k = DistortedKernel(phi, 1.0, 1.0, float(a), float(b))
    return assemble_kernel(k, gx, gy, f"Gamma[a={a:g}, b={b:g}, phi={phi.label}]", jobs)


def distort_kernel(k: Callable, alpha: float, beta: float) -> Callable:
    """``k_ab(x, y) = x**(1/(2a) - 1/2) y**(1/(2b) - 1/2) k(x**(1/a), y**(1/b))``."""
    alpha, beta = float(alpha), float(beta)
    if alpha == 0 or beta == 0:
        raise ValueError("distortion exponents must be nonzero")
    ex = 0.5 / alpha - 0.5
    ey = 0.5 / beta - 0.5
    if alpha == 1.0 and beta == 1.0:
        return k
    if isinstance(k, DistortedKernel):
        return DistortedKernel(
            k.phi, k.alpha / alpha, k.beta / beta, k.xw / alpha + ex, k.yw / beta + ey
        )

    def kt(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return _pow(x, ex) * _pow(y, ey) * k(_pow(x, 1.0 / alpha), _pow(y, 1.0 / beta))

    kt.label = f"distorted[{alpha:g}, {beta:g}]({getattr(k, 'label', 'k')})"
    return kt


def unitary_image(m: KernelMatrix, alpha: float, beta: float, jobs: int = 1) -> KernelMatrix:
    """Assemble the transformed kernel on the power images of ``m``'s grids.

    The Jacobian algebra makes the result equal ``sqrt(alpha*beta) * m``
    entry by entry, up to rounding.
    """
    if m.kernel is None:
        raise ValueError("unitary_image needs a matrix assembled from an evaluable kernel")
    alpha, beta = float(alpha), float(beta)
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"exponents must be positive, got ({alpha}, {beta})")
    k2 = distort_kernel(m.kernel, alpha, beta)
    gx = power_transform(m.row_grid, alpha)
    gy = power_transform(m.col_grid, beta)
    out = assemble_kernel(k2, gx, gy, f"U[{alpha:g}, {beta:g}]({m.label})", jobs)
    return out


def hankel_matvec_fast(phi_samples: np.ndarray, v: np.ndarray, h: float = 1.0) -> np.ndarray:
    """``H v`` with ``H[i, j] = phi_samples[i + j] * h`` in O(N log N).

    ``phi_samples`` must have length ``2N - 1`` for a length-``N`` vector.
    The Hankel product is a slice of the linear convolution of the samples
    with the reversed vector, computed by a zero-padded real FFT.
    """
    s = np.asarray(phi_samples)
    v = np.asarray(v)
    n = v.shape[0]
    if v.ndim != 1 or s.ndim != 1 or s.shape[0] != 2 * n - 1:
        raise ValueError(
            f"need 1-d samples of length 2N-1 = {2 * n - 1} for N = {n}, got {s.shape}"
        )
    if np.iscomplexobj(v) or np.iscomplexobj(s):
        re = hankel_matvec_fast(s.real, v.real, h) - hankel_matvec_fast(s.imag, v.imag, h)
        im = hankel_matvec_fast(s.real, v.imag, h) + hankel_matvec_fast(s.imag, v.real, h)
        return re + 1j * im
    size = next_fast_len(3 * n - 2, real=True)
    conv = irfft(rfft(s, size) * rfft(v[::-1], size), size)
    return h * conv[n - 1: 2 * n - 1]


class HankelOperator:
    """``D_x H D_y`` on a uniform midpoint grid, applied through the FFT.

    With grid points ``x_k = lo + (k + 1/2) h`` and weight exponents
    ``(a, b)`` this is the Nystrom matrix of ``x**a y**b phi(x + y)``
    without forming it.
    """

    def __init__(self, phi: Symbol, grid: Grid, a: float = 0.0, b: float = 0.0):
        if grid.kind != "uniform":
            raise ValueError("HankelOperator needs a uniform grid")
        n = len(grid)
        h = grid.meta["step"]
        offset = grid.meta["lo"] + 0.5 * h
        self.n = n
        self.h = h
        self.samples = phi(np.arange(2 * n - 1) * h + 2.0 * offset)
        x = grid.points
        self.dx = x**a if a != 0 else np.ones(n)
        self.dy = x**b if b != 0 else np.ones(n)
        self.shape = (n, n)
        self.dtype = np.dtype(float)

    def matvec(self, v):
        return self.dx * hankel_matvec_fast(self.samples, self.dy * np.asarray(v), self.h)

    def rmatvec(self, v):
        return self.dy * hankel_matvec_fast(self.samples, self.dx * np.asarray(v), self.h)

    def dense(self) -> np.ndarray:
        i = np.arange(self.n)
        return self.dx[:, None] * self.samples[i[:, None] + i[None, :]] * self.h * self.dy[None, :]
