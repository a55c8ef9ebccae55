"""Finite-difference gradients and the discrete TV norm on equiangular grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sphtv.grid import QuadratureWeights, SphereGrid, build_grid


@dataclass(frozen=True)
class GradientField:
    """Weighted gradient components, each of shape ``(n_theta, n_phi)``."""

    u: np.ndarray
    v: np.ndarray

    def magnitude(self) -> np.ndarray:
        return np.sqrt(self.u**2 + self.v**2)

    def __add__(self, other: "GradientField") -> "GradientField":
        return GradientField(self.u + other.u, self.v + other.v)

    def __sub__(self, other: "GradientField") -> "GradientField":
        return GradientField(self.u - other.u, self.v - other.v)

    def __mul__(self, a: float) -> "GradientField":
        return GradientField(a * self.u, a * self.v)

    __rmul__ = __mul__

    def vdot(self, other: "GradientField") -> float:
        return float(np.vdot(self.u, other.u).real + np.vdot(self.v, other.v).real)


def _as_2d(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-D (n_theta, n_phi) array, got shape {x.shape}")
    return x


def delta_theta(x: np.ndarray) -> np.ndarray:
    x = _as_2d(x)
    u = np.zeros_like(x)
    u[:-1] = x[1:] - x[:-1]
    return u


def delta_theta_adjoint(u: np.ndarray) -> np.ndarray:
    u = _as_2d(u)
    out = np.zeros_like(u)
    if u.shape[0] == 1:
        return out
    out[0] = -u[0]
    out[1:-1] = u[:-2] - u[1:-1]
    out[-1] = u[-2]
    return out


def delta_phi(x: np.ndarray) -> np.ndarray:
    x = _as_2d(x)
    return np.roll(x, -1, axis=1) - x


def delta_phi_adjoint(v: np.ndarray) -> np.ndarray:
    v = _as_2d(v)
    return np.roll(v, 1, axis=1) - v


def ring_factors(w: QuadratureWeights) -> tuple[np.ndarray, np.ndarray]:
    """Per-ring multipliers ``q`` and ``q / sin(theta)`` (zero on the South pole)."""
    grid = build_grid(w.scheme, w.L)
    pole = grid.pole_rings
    s = np.sin(grid.thetas)
    r = np.zeros_like(w.q)
    r[~pole] = w.q[~pole] / s[~pole]
    return np.asarray(w.q), r


def _check(x: np.ndarray, w: QuadratureWeights, grid: SphereGrid | None) -> None:
    if grid is not None and not w.matches(grid):
        raise ValueError("image grid and quadrature weights disagree on scheme/L")
    if x.shape != (w.q.size, 2 * w.L - 1):
        raise ValueError(f"array shape {x.shape} does not match {w.scheme.value} L={w.L}")


def weighted_gradient(x: np.ndarray, w: QuadratureWeights, grid: SphereGrid | None = None) -> GradientField:
    x = _as_2d(x)
    _check(x, w, grid)
    q, r = ring_factors(w)
    return GradientField(q[:, None] * delta_theta(x), r[:, None] * delta_phi(x))


def weighted_gradient_adjoint(g: GradientField, w: QuadratureWeights) -> np.ndarray:
    _check(_as_2d(g.u), w, None)
    _check(_as_2d(g.v), w, None)
    q, r = ring_factors(w)
    return delta_theta_adjoint(q[:, None] * g.u) + delta_phi_adjoint(r[:, None] * g.v)


def gradient_magnitude(x: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Unweighted ``|grad x|``; the phi term is dropped on South-pole rings."""
    x = _as_2d(x)
    inv_sin = np.zeros(grid.n_theta)
    ok = ~grid.pole_rings
    inv_sin[ok] = 1.0 / np.sin(grid.thetas[ok])
    return np.sqrt(delta_theta(x) ** 2 + (inv_sin[:, None] * delta_phi(x)) ** 2)


def tv_norm(x: np.ndarray, w: QuadratureWeights, grid: SphereGrid | None = None) -> float:
    return float(weighted_gradient(np.asarray(x), w, grid).magnitude().sum())
