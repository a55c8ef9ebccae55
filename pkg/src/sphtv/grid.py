"""Equiangular MW and DH sampling grids and their quadrature weights.

Images live on a dense ``(n_theta, n_phi)`` lattice stored row-major by ring.
The MW lattice keeps the redundant South-pole ring (``2L-1`` copies of one
point) so that FFT stages and finite differences see a uniform layout; the
number of distinct points is carried as metadata.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

POLE_TOL = 1e-14


class SamplingScheme(str, enum.Enum):
    MW = "mw"
    DH = "dh"

    @classmethod
    def parse(cls, value: "SamplingScheme | str") -> "SamplingScheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown sampling scheme {value!r}") from None


@dataclass(frozen=True, eq=False)
class SphereGrid:
    scheme: SamplingScheme
    L: int
    thetas: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)

    @property
    def n_theta(self) -> int:
        return self.thetas.size

    @property
    def n_phi(self) -> int:
        return self.phis.size

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_theta, self.n_phi)

    @property
    def n_samples(self) -> int:
        return self.n_theta * self.n_phi

    @property
    def n_distinct(self) -> int:
        """Number of distinct points (the MW South-pole ring counts once)."""
        if self.scheme is SamplingScheme.MW:
            return (self.L - 1) * (2 * self.L - 1) + 1
        return 2 * self.L * (2 * self.L - 1)

    @property
    def pole_rings(self) -> np.ndarray:
        """Boolean mask over rings sitting on the South pole."""
        return np.abs(self.thetas - np.pi) <= POLE_TOL

    def distinct_indices(self) -> np.ndarray:
        """Flat indices of one representative per distinct point."""
        idx = np.arange(self.n_samples).reshape(self.shape)
        keep = np.ones(self.shape, dtype=bool)
        keep[self.pole_rings, 1:] = False
        return idx[keep]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SphereGrid):
            return NotImplemented
        return self.scheme is other.scheme and self.L == other.L

    def __hash__(self) -> int:
        return hash((self.scheme, self.L))


@dataclass(frozen=True, eq=False)
class QuadratureWeights:
    """Per-ring weights; the sample-wise weight of ``(t, p)`` is ``q[t]``."""

    scheme: SamplingScheme
    L: int
    q: np.ndarray = field(repr=False)

    def matches(self, grid: SphereGrid) -> bool:
        return self.scheme is grid.scheme and self.L == grid.L

    def as_image(self) -> np.ndarray:
        n_phi = 2 * self.L - 1
        return np.repeat(self.q[:, None], n_phi, axis=1)


@lru_cache(maxsize=None)
def build_grid(scheme: SamplingScheme | str, L: int) -> SphereGrid:
    scheme = SamplingScheme.parse(scheme)
    L = int(L)
    if L < 1:
        raise ValueError(f"band-limit must be >= 1, got {L}")
    n_phi = 2 * L - 1
    if scheme is SamplingScheme.MW:
        t = np.arange(L)
        thetas = np.pi * (2 * t + 1) / (2 * L - 1)
    else:
        t = np.arange(2 * L)
        thetas = np.pi * (2 * t + 1) / (4 * L)
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    thetas.setflags(write=False)
    phis.setflags(write=False)
    return SphereGrid(scheme, L, thetas, phis)


def sin_theta_fourier_coefficients(p: np.ndarray) -> np.ndarray:
    """Analytic ``w(p) = int_0^pi exp(i p theta) sin(theta) dtheta`` for integer p."""
    p = np.asarray(p)
    out = np.zeros(p.shape, dtype=complex)
    out[p == 0] = 2.0
    out[p == 1] = 0.5j * np.pi
    out[p == -1] = -0.5j * np.pi
    even = (p % 2 == 0) & (p != 0)
    out[even] = 2.0 / (1.0 - p[even].astype(float) ** 2)
    return out


def _mw_weights(L: int) -> np.ndarray:
    n = 2 * L - 1
    theta_ext = np.pi * (2 * np.arange(n) + 1) / n
    mp = np.arange(-(L - 1), L)
    w = sin_theta_fourier_coefficients(mp)
    q_ext = (w[None, :] * np.exp(-1j * np.outer(theta_ext, mp))).sum(axis=1)
    q_ext *= (2 * np.pi / n) / n
    # fold the periodic extension theta -> 2pi - theta back onto [0, pi]
    q = q_ext[:L].copy()
    q[: L - 1] += q_ext[n - 1 - np.arange(L - 1)]
    return q.real


def _dh_weights(L: int) -> np.ndarray:
    thetas = build_grid(SamplingScheme.DH, L).thetas
    k = np.arange(L)
    s = (np.sin(np.outer(thetas, 2 * k + 1)) / (2 * k + 1)).sum(axis=1)
    q = np.sin(thetas) * s
    # Fejer-type weights integrate 1 exactly; fix the constant so sum_{t,p} q = 4 pi
    return q * (4 * np.pi / ((2 * L - 1) * q.sum()))


@lru_cache(maxsize=None)
def quadrature_weights(grid: SphereGrid) -> QuadratureWeights:
    if grid.scheme is SamplingScheme.MW:
        q = _mw_weights(grid.L)
    else:
        q = _dh_weights(grid.L)
    q.setflags(write=False)
    return QuadratureWeights(grid.scheme, grid.L, q)


def integrate(x: np.ndarray, w: QuadratureWeights, grid: SphereGrid | None = None) -> float:
    """Quadrature sum ``sum_{t,p} q(theta_t) x[t, p]``."""
    if grid is not None and not w.matches(grid):
        raise ValueError("image grid and quadrature weights disagree on scheme/L")
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != w.q.size or x.shape[1] != 2 * w.L - 1:
        raise ValueError(f"image shape {x.shape} does not match {w.scheme.value} L={w.L}")
    return (w.q @ x.sum(axis=1)).item()


def upsampled_grid(L: int) -> SphereGrid:
    """MW grid fine enough to hold the square of a signal band-limited at ``L``."""
    if L < 1:
        raise ValueError(f"band-limit must be >= 1, got {L}")
    return build_grid(SamplingScheme.MW, 2 * L - 1)
