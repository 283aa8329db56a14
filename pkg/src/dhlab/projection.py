"""Averaging projections onto distorted and weighted Hankel kernels.

The angular measure on a level curve ``x**alpha + y**beta = r`` becomes,
after ``u = sin(t)**2``, the Jacobi weight ``u**(1/beta-1) (1-u)**(1/alpha-1)``
on (0, 1), so Gauss-Jacobi rules integrate it without endpoint trouble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import roots_jacobi

from .grid import Grid, log_grid
from .operator import DistortedKernel, KernelMatrix
from .symbol import Symbol, tabulated

__all__ = [
    "DivergenceError",
    "JacobiRule",
    "jacobi_rule",
    "angular_rule",
    "beta_normalizer",
    "project_Q",
    "QProjector",
    "project_Q_matrix",
    "project_P",
    "project_P_weighted",
    "polar_integrate",
]


class DivergenceError(RuntimeError):
    """An improper integral failed to converge under refinement."""


@dataclass(frozen=True, eq=False)
class JacobiRule:
    """Nodes and weights for ``int_0^1 u**e_u (1-u)**e_v g(u) du``."""

    nodes: np.ndarray
    weights: np.ndarray
    e_u: float
    e_v: float

    def __len__(self):
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Apply the rule along the last axis."""
        return np.asarray(values) @ self.weights


def jacobi_rule(e_u: float, e_v: float, n: int = 64) -> JacobiRule:
    """Gauss-Jacobi rule for the weight ``u**e_u (1-u)**e_v`` on (0, 1)."""
    if not (e_u > -1 and e_v > -1):
        raise ValueError(f"Jacobi exponents must exceed -1, got ({e_u}, {e_v})")
    if int(n) != n or n < 1:
        raise ValueError(f"node count must be a positive integer, got {n}")
    # scipy's weight is (1-x)**A (1+x)**B on (-1, 1); u = (1+x)/2
    x, w = roots_jacobi(int(n), e_v, e_u)
    u = 0.5 * (1.0 + x)
    w = w / 2.0 ** (e_u + e_v + 1.0)
    return JacobiRule(u, w, float(e_u), float(e_v))


def angular_rule(alpha: float, beta: float, n: int = 64) -> JacobiRule:
    """Rule for the level-curve measure of ``x**alpha + y**beta``."""
    _check_positive(alpha, beta)
    return jacobi_rule(1.0 / beta - 1.0, 1.0 / alpha - 1.0, n)


def _check_positive(alpha, beta):
    if not (alpha > 0 and beta > 0):
        raise ValueError(f"exponents must be positive, got ({alpha}, {beta})")


def _log_beta(a: float, b: float) -> float:
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta_normalizer(alpha: float, beta: float) -> float:
    """``A = int_0^(pi/2) cos**(2/alpha-1) sin**(2/beta-1) dt = B(1/alpha, 1/beta)/2``."""
    _check_positive(alpha, beta)
    return 0.5 * math.exp(_log_beta(1.0 / alpha, 1.0 / beta))


def _level_points(r: np.ndarray, alpha: float, beta: float, rule: JacobiRule):
    r = np.asarray(r, dtype=float)[..., None]
    x = (r * (1.0 - rule.nodes)) ** (1.0 / alpha)
    y = (r * rule.nodes) ** (1.0 / beta)
    return x, y


def project_Q(k: Callable, alpha: float, beta: float,
              rule: Optional[JacobiRule] = None) -> Symbol:
    """Average of ``k`` over the level curves ``x**alpha + y**beta = r``.

    Returns the symbol ``phi(r)``; a kernel of the form
    ``psi(x**alpha + y**beta)`` is mapped to ``psi``.
    """
    alpha, beta = float(alpha), float(beta)
    _check_positive(alpha, beta)
    if rule is None:
        rule = angular_rule(alpha, beta)
    norm = math.exp(_log_beta(1.0 / alpha, 1.0 / beta))

    def phi(r):
        r = np.asarray(r, dtype=float)
        x, y = _level_points(r, alpha, beta, rule)
        with np.errstate(all="ignore"):
            vals = np.asarray(k(x, y), dtype=float) * np.ones(x.shape)
        bad = ~np.isfinite(vals)
        if bad.any():
            idx = np.argwhere(bad)[0]
            rr = float(np.broadcast_to(r[..., None], x.shape)[tuple(idx)])
            t = math.asin(math.sqrt(rule.nodes[idx[-1]]))
            raise FloatingPointError(f"kernel not finite on level curve r = {rr!r}, t = {t!r}")
        return rule.integrate(vals) / norm

    label = f"Q[{alpha:g}, {beta:g}]({getattr(k, 'label', 'k')})"
    return Symbol(phi, support=None, label=label)


class QProjector:
    """Frobenius-orthogonal projection onto matrices of distorted Hankel form.

    The target space is ``{sqrt(w_i) phi(x_i**alpha + y_j**beta) sqrt(u_j)}``.
    When the level values ``x_i**alpha + y_j**beta`` form a lattice (power
    images of uniform grids), ``phi`` ranges over all functions of the
    level and the projection is the weighted average over each level set.
    Otherwise ``phi`` ranges over piecewise-linear hats in ``log2 r``.
    Either way the result is an exact orthogonal projection on the matrix
    space, hence idempotent, self-adjoint and contractive in S_2.
    """

    def __init__(self, gx: Grid, gy: Grid, alpha: float, beta: float, mode: str = "auto",
                 levels_per_octave: int = 128, cluster_rtol: float = 1e-10):
        alpha, beta = float(alpha), float(beta)
        _check_positive(alpha, beta)
        if len(gx) < 2 or len(gy) < 2:
            raise ValueError("projection needs grids with at least two points")
        self.alpha, self.beta = alpha, beta
        self.gx, self.gy = gx, gy
        self.shape = (len(gx), len(gy))
        r = (gx.points[:, None] ** alpha + gy.points[None, :] ** beta).ravel()
        self.mass = np.outer(gx.weights, gy.weights).ravel()
        self.root = np.sqrt(self.mass)
        order = np.argsort(r, kind="stable")
        rs = r[order]
        brk = np.diff(rs) > cluster_rtol * rs[1:]
        n_levels = int(brk.sum()) + 1
        if mode == "auto":
            mode = "lattice" if n_levels <= len(gx) + len(gy) - 1 else "hat"
        if mode == "lattice":
            ids = np.empty(r.size, dtype=np.intp)
            ids[order] = np.concatenate(([0], np.cumsum(brk)))
            self.ids = ids
            self.n_basis = n_levels
            self.level_mass = np.bincount(ids, self.mass, minlength=n_levels)
            self.nodes = np.bincount(ids, r, minlength=n_levels) / np.bincount(ids, minlength=n_levels)
        elif mode == "hat":
            lo, hi = math.log2(rs[0]), math.log2(rs[-1])
            m = max(2, int(math.ceil((hi - lo) * levels_per_octave)) + 1)
            step = (hi - lo) / (m - 1)
            s = np.clip((np.log2(r) - lo) / step, 0.0, m - 1.0)
            left = np.minimum(np.floor(s).astype(np.intp), m - 2)
            frac = s - left
            self.left, self.frac = left, frac
            self.n_basis = m
            gram_d = np.bincount(left, self.mass * (1 - frac) ** 2, minlength=m)
            gram_d += np.bincount(left + 1, self.mass * frac**2, minlength=m)
            gram_o = np.bincount(left, self.mass * (1 - frac) * frac, minlength=m)[: m - 1]
            # the Gram matrix of neighbouring hats is tridiagonal; unit-diagonal
            # scaling keeps hats with little mass from spoiling its conditioning
            live = gram_d > 0
            scale = np.zeros(m)
            scale[live] = 1.0 / np.sqrt(gram_d[live])
            evals, evecs = eigh_tridiagonal(np.where(live, 1.0, 0.0), gram_o * scale[:-1] * scale[1:])
            keep = evals > evals.max() * 1e-8
            self._evecs, self._evals = scale[:, None] * evecs[:, keep], evals[keep]
            self.nodes = np.exp2(lo + step * np.arange(m))
        else:
            raise ValueError(f"unknown projection mode {mode!r}")
        self.mode = mode

    def coefficients(self, entries: np.ndarray) -> np.ndarray:
        e = np.asarray(entries, dtype=float).ravel()
        if e.size != self.mass.size:
            raise ValueError(f"matrix of shape {np.shape(entries)} does not match {self.shape}")
        proj = self.root * e
        if self.mode == "lattice":
            return np.bincount(self.ids, proj, minlength=self.n_basis) / self.level_mass
        rhs = np.bincount(self.left, proj * (1 - self.frac), minlength=self.n_basis)
        rhs += np.bincount(self.left + 1, proj * self.frac, minlength=self.n_basis)
        return self._evecs @ ((self._evecs.T @ rhs) / self._evals)

    def expand(self, coef: np.ndarray) -> np.ndarray:
        if self.mode == "lattice":
            vals = coef[self.ids]
        else:
            vals = coef[self.left] * (1 - self.frac) + coef[self.left + 1] * self.frac
        return (self.root * vals).reshape(self.shape)

    def apply(self, entries: np.ndarray) -> np.ndarray:
        return self.expand(self.coefficients(entries))

    def symbol(self, coef: np.ndarray, label: str = "Q-projection") -> Symbol:
        return tabulated(self.nodes, coef, log=(self.mode == "hat"), label=label)


def project_Q_matrix(m: KernelMatrix, alpha: float, beta: float,
                     projector: Optional[QProjector] = None, **kwargs) -> KernelMatrix:
    """Orthogonal projection of ``m`` onto distorted Hankel matrices on its grids."""
    if projector is None:
        projector = QProjector(m.row_grid, m.col_grid, alpha, beta, **kwargs)
    elif not (projector.gx.same_as(m.row_grid) and projector.gy.same_as(m.col_grid)):
        raise ValueError("projector was built for different grids")
    coef = projector.coefficients(m.entries)
    out = projector.expand(coef)
    label = f"Q[{alpha:g}, {beta:g}, {projector.mode}]({m.label})"
    sym = projector.symbol(coef, label=f"symbol of {label}")
    return KernelMatrix(m.row_grid, m.col_grid, out, label, DistortedKernel(sym, float(alpha), float(beta)))


_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _panel(f, lo, hi):
    half = 0.5 * (hi - lo)
    u = lo + half * (1.0 + _GL_X)
    return half * float(np.dot(_GL_W, f(u)))


def _dyadic_half(f, toward_zero: bool, tol: float, max_panels: int, where: str) -> float:
    """Integral over [0, 1/2] (or [1/2, 1]) on panels shrinking toward the endpoint."""
    total = 0.0
    prev = None
    ratios = []
    for m in range(1, max_panels + 1):
        a, b = 2.0 ** (-m - 1), 2.0 ** (-m)
        c = _panel(f, a, b) if toward_zero else _panel(f, 1.0 - b, 1.0 - a)
        total += c
        if prev is not None and prev != 0.0:
            ratios.append(abs(c / prev))
        prev = c
        if m >= 6 and len(ratios) >= 3:
            if min(ratios[-3:]) >= 0.99:
                raise DivergenceError(
                    f"anti-diagonal integral diverges near the {'left' if toward_zero else 'right'}"
                    f" endpoint at {where}: panel ratio {min(ratios[-3:]):.4f}"
                )
            q = max(ratios[-3:])
            if q >= 0.99:
                # a sign change or zero of the integrand, not a trend yet
                continue
            tail = abs(c) * q / (1.0 - q)
            if tail <= tol * max(abs(total), 1e-300) or c == 0.0:
                return total + (c * q / (1.0 - q) if c else 0.0)
    raise DivergenceError(f"anti-diagonal integral not resolved in {max_panels} panels at {where}")


def _segment_average(g: Callable[[np.ndarray], np.ndarray], tol: float, where: str) -> float:
    """``int_0^1 g(u) du`` with dyadic refinement toward both endpoints."""
    return (_dyadic_half(g, True, tol, 200, where) + _dyadic_half(g, False, tol, 50, where))


def project_P(k: Callable, tol: float = 1e-13) -> Symbol:
    """``phi(x) = (1/x) int_0^x k(t, x - t) dt``, as an evaluator."""

    def phi(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape)
        for idx, xv in np.ndenumerate(x):
            if xv <= 0:
                out[idx] = 0.0
                continue

            def g(u, xv=xv):
                with np.errstate(all="ignore"):
                    vals = np.asarray(k(xv * u, xv * (1.0 - u)), dtype=float) * np.ones(u.shape)
                if not np.all(np.isfinite(vals)):
                    raise FloatingPointError(f"kernel not finite on anti-diagonal x = {xv!r}")
                return vals

            out[idx] = _segment_average(g, tol, f"x = {xv!r}")
        return out

    return Symbol(phi, label=f"P({getattr(k, 'label', 'k')})")


def project_P_weighted(k: Callable, a: float, b: float, n: int = 64) -> Symbol:
    """Anti-diagonal average of ``k`` with weight ``t**a (x - t)**b``."""
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise ValueError(f"weight exponents must be positive, got ({a}, {b})")
    rule = jacobi_rule(a, b, n)
    norm = math.exp(_log_beta(a + 1.0, b + 1.0))

    def phi(x):
        x = np.asarray(x, dtype=float)[..., None]
        with np.errstate(all="ignore"):
            vals = np.asarray(k(x * rule.nodes, x * (1.0 - rule.nodes)), dtype=float)
        vals = vals * np.ones(x.shape[:-1] + (len(rule),))
        if not np.all(np.isfinite(vals)):
            raise FloatingPointError("kernel not finite on an anti-diagonal")
        return rule.integrate(vals) / norm

    return Symbol(phi, label=f"P[{a:g}, {b:g}]({getattr(k, 'label', 'k')})")


def polar_integrate(f: Callable, alpha: float, beta: float, radial: Optional[Grid] = None,
                    rule: Optional[JacobiRule] = None, tail_tol: float = 1e-8) -> float:
    """``int int f(x, y) dx dy`` over the quadrant in generalized polar form.

    Radial part on a dyadic grid (default ``2**-40 .. 2**12``), angular part
    by the Jacobi rule.  Raises when the first or last radial octave holds
    more than ``tail_tol`` of the total.
    """
    alpha, beta = float(alpha), float(beta)
    _check_positive(alpha, beta)
    if radial is None:
        radial = log_grid(-40, 12, 64)
    if rule is None:
        rule = angular_rule(alpha, beta, 256)
    r = radial.points
    x, y = _level_points(r, alpha, beta, rule)
    with np.errstate(all="ignore"):
        vals = np.asarray(f(x, y), dtype=float) * np.ones(x.shape)
    if not np.all(np.isfinite(vals)):
        i = int(np.argwhere(~np.isfinite(vals))[0][0])
        raise FloatingPointError(f"integrand not finite on level r = {r[i]!r}")
    radial_vals = r ** (1.0 / alpha + 1.0 / beta - 1.0) * rule.integrate(vals) / (alpha * beta)
    contrib = radial.weights * radial_vals
    total = float(contrib.sum())
    ppo = radial.ppo or max(1, len(radial) // 8)
    edge = max(abs(contrib[:ppo]).sum(), abs(contrib[-ppo:]).sum())
    if edge > tail_tol * max(abs(total), 1e-300) and edge > 1e-300:
        raise DivergenceError(
            f"radial tail not negligible: edge octave holds {edge:.3e} of total {total:.3e}"
        )
    return total
