"""Mollweide rendering of sampled sphere images with a black-to-yellow colour map."""

from __future__ import annotations

import io

import numpy as np

from sphtv.grid import SphereGrid

SQRT2 = np.sqrt(2.0)
OFF_MAP = (255, 255, 255)


def mollweide_aux_angle(lat: np.ndarray, tol: float = 1e-10, max_iter: int = 100) -> np.ndarray:
    """Solve ``2 a + sin 2a = pi sin(lat)`` for the auxiliary angle by Newton's method."""
    lat = np.asarray(lat, dtype=float)
    rhs = np.pi * np.sin(lat)
    a = lat.copy()
    for _ in range(max_iter):
        f = 2 * a + np.sin(2 * a) - rhs
        fp = 2 + 2 * np.cos(2 * a)
        # the derivative vanishes at the poles, where a = lat is already exact
        safe = fp > 1e-300
        step = np.where(safe, f / np.where(safe, fp, 1.0), 0.0)
        a = a - step
        if np.all(np.abs(step) <= tol):
            break
    return a


def mollweide_project(lat, lon, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Map (latitude, longitude in [-pi, pi]) to Mollweide plane coordinates."""
    a = mollweide_aux_angle(lat, tol)
    x = 2 * SQRT2 / np.pi * np.asarray(lon, dtype=float) * np.cos(a)
    y = SQRT2 * np.sin(a)
    return x, y


def mollweide_unproject(x, y) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Plane coordinates -> (latitude, longitude, inside-ellipse mask)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    inside = x**2 / 8 + y**2 / 2 <= 1
    a = np.arcsin(np.clip(y / SQRT2, -1, 1))
    lat = np.arcsin(np.clip((2 * a + np.sin(2 * a)) / np.pi, -1, 1))
    c = np.cos(a)
    lon = np.where(c > 0, np.pi * x / (2 * SQRT2 * np.where(c > 0, c, 1)), 0.0)
    inside &= np.abs(lon) <= np.pi
    return lat, lon, inside


def pixel_coordinates(width: int, height: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Plane coordinates of pixel centres; row 0 is the North edge."""
    height = height or width // 2
    x = (np.arange(width) + 0.5) / width * 4 * SQRT2 - 2 * SQRT2
    y = SQRT2 - (np.arange(height) + 0.5) / height * 2 * SQRT2
    return np.meshgrid(x, y)


def nearest_sample_indices(grid: SphereGrid, theta: np.ndarray, phi: np.ndarray):
    """Nearest ring and nearest longitude index for each (theta, phi)."""
    th = grid.thetas
    # rings are increasing in theta; compare against midpoints
    mids = 0.5 * (th[1:] + th[:-1])
    t = np.searchsorted(mids, theta)
    n_phi = grid.phis.size
    p = np.mod(np.rint(np.mod(phi, 2 * np.pi) / (2 * np.pi) * n_phi).astype(int), n_phi)
    return t, p


def colourize(values: np.ndarray, vmin: float = 0.0, vmax: float = 1.0) -> np.ndarray:
    """Linear black (vmin) to yellow (vmax) map, 8-bit RGB."""
    if not vmax > vmin:
        raise ValueError("vmax must exceed vmin")
    v = np.clip((np.asarray(values, dtype=float) - vmin) / (vmax - vmin), 0, 1)
    level = np.rint(255 * v).astype(np.uint8)
    return np.stack([level, level, np.zeros_like(level)], axis=-1)


def render_mollweide(image: np.ndarray, grid: SphereGrid, width: int = 800,
                     vmin: float = 0.0, vmax: float = 1.0) -> np.ndarray:
    """RGB raster of ``image`` (real part) with white pixels outside the ellipse.

    Longitude zero sits at the centre of the map; each pixel shows its nearest
    sample (no interpolation).
    """
    image = np.real(np.asarray(image)).reshape(grid.shape)
    X, Y = pixel_coordinates(width)
    lat, lon, inside = mollweide_unproject(X, Y)
    t, p = nearest_sample_indices(grid, np.pi / 2 - lat, lon)
    rgb = colourize(image[t, p], vmin, vmax)
    rgb[~inside] = OFF_MAP
    return rgb


def png_bytes(rgb: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
