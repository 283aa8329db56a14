"""Singular spectra, Schatten (quasi)norms, HS quadrature and trace pairing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .grid import Grid
from .operator import KernelMatrix

__all__ = [
    "SingularSpectrum",
    "ConvergenceError",
    "dense_singular_values",
    "topk_singular_values",
    "schatten",
    "hs_norm_quadrature",
    "trace_pair",
    "dual_element",
    "monotonicity_violations",
    "block_additivity_defect",
]

EPS = np.finfo(float).eps


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residuals: np.ndarray):
        super().__init__(message)
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class SingularSpectrum:
    """Nonincreasing singular values with a noise floor for norm sums."""

    values: np.ndarray
    source: str = "dense"
    noise_floor: Optional[float] = None
    dim: int = 0

    def __post_init__(self):
        s = np.array(self.values, dtype=float)
        if s.ndim != 1:
            raise ValueError("singular values must be a 1-d array")
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError("singular values must be finite and nonnegative")
        if np.any(np.diff(s) > 0):
            raise ValueError("singular values must be nonincreasing")
        s.setflags(write=False)
        object.__setattr__(self, "values", s)
        dim = self.dim or s.size
        object.__setattr__(self, "dim", int(dim))
        if self.noise_floor is None:
            top = s[0] if s.size else 0.0
            object.__setattr__(self, "noise_floor", float(EPS * top * dim))

    def __len__(self):
        return self.values.size

    @property
    def significant(self) -> np.ndarray:
        return self.values[self.values > self.noise_floor]

    def prefix(self, k: int) -> list:
        return [float(v) for v in self.values[:k]]


def _entries(m) -> np.ndarray:
    return m.entries if isinstance(m, KernelMatrix) else np.asarray(m, dtype=float)


def dense_singular_values(m) -> SingularSpectrum:
    """All singular values by a dense SVD (divide and conquer, QR fallback)."""
    a = _entries(m)
    if a.size == 0:
        return SingularSpectrum(np.zeros(0), "dense", 0.0, 0)
    try:
        s = linalg.svdvals(a, check_finite=True)
    except linalg.LinAlgError:
        s = linalg.svd(a, compute_uv=False, lapack_driver="gesvd")
    s = np.sort(np.abs(s))[::-1]
    return SingularSpectrum(s, "dense", None, max(a.shape))


def topk_singular_values(matvec: Callable, rmatvec: Callable, shape: Tuple[int, int], k: int,
                         tol: float = 1e-10, seed: int = 0,
                         max_steps: Optional[int] = None) -> SingularSpectrum:
    """Top ``k`` singular values by Golub-Kahan-Lanczos bidiagonalization.

    Both Lanczos bases are fully reorthogonalized.  A Ritz value counts as
    converged when its residual ``beta_m |P[m-1, i]|`` is below
    ``tol * s_0``.  At most ``4k + 32`` steps are taken.
    """
    m, n = int(shape[0]), int(shape[1])
    k = int(k)
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    if m < 1 or n < 1:
        raise ValueError(f"bad operator shape {shape}")
    cap = min(max_steps or 4 * k + 32, min(m, n))
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    V = np.zeros((cap + 1, n))
    U = np.zeros((cap, m))
    alphas, betas = [], []
    V[0] = v
    u = np.asarray(matvec(v), dtype=float)
    if u.shape != (m,):
        raise ValueError(f"matvec returned shape {u.shape}, expected ({m},)")
    scale = 0.0
    residuals = np.full(k, np.inf)
    theta = np.zeros(0)
    steps = 0
    for j in range(cap):
        a = np.linalg.norm(u)
        scale = max(scale, a)
        steps = j + 1
        if a <= EPS * max(scale, 1e-300) * max(m, n):
            # A v_j lies in span(U): the invariant pair is [B_j | beta_j e_j]
            if alphas:
                B = np.diag(alphas) + np.diag(betas[:-1], 1)
                B = np.hstack([B, np.zeros((len(alphas), 1))])
                B[-1, -1] = betas[-1]
                theta = np.linalg.svd(B, compute_uv=False)
            else:
                theta = np.zeros(1)
            residuals = np.zeros(min(k, theta.size))
            break
        u /= a
        # reorthogonalize twice against previous left vectors
        for _ in range(2):
            u -= U[:j].T @ (U[:j] @ u)
        u /= np.linalg.norm(u)
        U[j] = u
        alphas.append(a)
        w = np.asarray(rmatvec(u), dtype=float)
        if w.shape != (n,):
            raise ValueError(f"rmatvec returned shape {w.shape}, expected ({n},)")
        w -= a * V[j]
        for _ in range(2):
            w -= V[: j + 1].T @ (V[: j + 1] @ w)
        b = np.linalg.norm(w)
        betas.append(b)
        B = np.diag(alphas) + np.diag(betas[:-1], 1)
        P, theta, _ = np.linalg.svd(B)
        kk = min(k, theta.size)
        residuals = b * np.abs(P[-1, :kk])
        breakdown = b <= EPS * max(scale, theta[0]) * max(m, n)
        if breakdown or (theta.size >= k and np.all(residuals <= tol * theta[0])):
            break
        V[j + 1] = w / b
        u = np.asarray(matvec(V[j + 1]), dtype=float) - b * u
    else:
        if not (theta.size >= k and np.all(residuals <= tol * theta[0])):
            raise ConvergenceError(
                f"Lanczos did not converge in {cap} steps; residuals {residuals}", residuals
            )
    vals = np.zeros(k)
    got = min(k, theta.size)
    vals[:got] = theta[:got]
    return SingularSpectrum(np.sort(vals)[::-1], f"iterative(k={k}, tol={tol:g}, steps={steps})",
                            None, max(m, n))


def schatten(sp: SingularSpectrum, p: float) -> float:
    """``(sum s_j**p)**(1/p)`` over values above the noise floor; ``s_0`` at inf."""
    p = float(p)
    if not p > 0:
        raise ValueError(f"Schatten exponent must lie in (0, inf], got {p}")
    if math.isinf(p):
        return float(sp.values[0]) if len(sp) else 0.0
    s = sp.significant
    if s.size == 0:
        return 0.0
    # scale out s_0 to keep large p from overflowing
    top = s[0]
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def hs_norm_quadrature(k: Callable, gx: Grid, gy: Grid) -> float:
    """``(sum_ij |k(x_i, y_j)|**2 w_i u_j)**(1/2)``."""
    with np.errstate(all="ignore"):
        vals = np.asarray(k(gx.points[:, None], gy.points[None, :]), dtype=float)
    vals = vals * np.ones((len(gx), len(gy)))
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = (int(v) for v in np.argwhere(bad)[0])
        raise FloatingPointError(
            f"kernel not finite at x = {gx.points[i]!r}, y = {gy.points[j]!r}"
        )
    return float(math.sqrt(np.sum(vals**2 * np.outer(gx.weights, gy.weights))))


def trace_pair(a: KernelMatrix, b: KernelMatrix) -> complex:
    """``trace(A B^*) = sum_ij A_ij conj(B_ij)``; grids must coincide."""
    if not (a.row_grid.same_as(b.row_grid) and a.col_grid.same_as(b.col_grid)):
        raise ValueError("trace pairing needs matrices on identical grids")
    return complex(np.vdot(b.entries, a.entries))


def dual_element(entries: np.ndarray, p: float) -> np.ndarray:
    """A norming matrix ``Z`` with ``||Z||_{p'} = 1`` and ``<A, Z> = ||A||_p``."""
    u, s, vt = np.linalg.svd(entries, full_matrices=False)
    p = float(p)
    if s[0] == 0:
        return np.zeros_like(entries)
    if math.isinf(p):
        return np.outer(u[:, 0], vt[0])
    if p == 1.0:
        keep = s > EPS * s[0] * max(entries.shape)
        return u[:, keep] @ vt[keep]
    r = s / s[0]
    d = r ** (p - 1.0)
    d /= np.sum(r**p) ** ((p - 1.0) / p)
    return (u * d) @ vt


def monotonicity_violations(sp: SingularSpectrum,
                            ps: Sequence[float] = (0.5, 1, 2, 4, 8, math.inf),
                            rtol: float = 1e-12) -> int:
    """Number of adjacent pairs ``p < q`` with ``||.||_p < ||.||_q``."""
    norms = [schatten(sp, p) for p in sorted(ps)]
    return sum(1 for lo, hi in zip(norms, norms[1:]) if lo < hi * (1.0 - rtol))


def block_additivity_defect(whole: SingularSpectrum, blocks: Iterable[SingularSpectrum],
                            p: float) -> float:
    """Relative defect of ``||A||_p**p = sum_k ||A_k||_p**p``."""
    lhs = schatten(whole, p) ** p
    rhs = sum(schatten(b, p) ** p for b in blocks)
    return abs(lhs - rhs) / max(lhs, rhs, 1e-300)
