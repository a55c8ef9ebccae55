"""Spherical harmonic transforms on MW and DH grids, plus their adjoints.

Coefficients are flat complex vectors of length ``L**2`` indexed by
``i = l**2 + l + m``. Images are complex or real arrays of shape
``(n_theta, n_phi)``.

The MW transforms are staged (Wigner-at-pi/2 separation, then FFTs in theta
and phi) and cost O(L^3). Every stage is written for spin ``s = 0``; the
general-spin factors ``(-1)^s`` and ``i^(m+s)`` reduce to ``1`` and ``i^m``.
The DH transforms evaluate the normalised associated Legendre functions
directly on each ring and use the DH quadrature weights for analysis.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from sphtv.grid import (
    SamplingScheme,
    SphereGrid,
    build_grid,
    quadrature_weights,
    sin_theta_fourier_coefficients,
)
from sphtv.wigner import build_delta_table

SPIN = 0


def elm2ind(el: int, m: int) -> int:
    return el * el + el + m


def ind2elm(i: int) -> tuple[int, int]:
    el = int(np.floor(np.sqrt(i)))
    return el, i - el * el - el


def half_elm2ind(el: int, m: int) -> int:
    return el * (el + 1) // 2 + m


@lru_cache(maxsize=None)
def _layout(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Row/column of each flat coefficient inside a padded ``(L, 2L-1)`` array."""
    el = np.repeat(np.arange(L), 2 * np.arange(L) + 1)
    m = np.arange(L * L) - el * el - el
    return el, m + L - 1


def _to_padded(flm: np.ndarray, L: int) -> np.ndarray:
    rows, cols = _layout(L)
    out = np.zeros((L, 2 * L - 1), dtype=complex)
    out[rows, cols] = flm
    return out


def _from_padded(padded: np.ndarray, L: int) -> np.ndarray:
    rows, cols = _layout(L)
    return padded[rows, cols]


def _check_coeffs(flm: np.ndarray, L: int) -> np.ndarray:
    flm = np.asarray(flm)
    if flm.shape != (L * L,):
        raise ValueError(f"expected {L * L} coefficients for L={L}, got shape {flm.shape}")
    return flm


def _check_image(x: np.ndarray, grid: SphereGrid) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != grid.shape:
        raise ValueError(f"image shape {x.shape} does not match grid {grid.shape}")
    return x


def _complex_matmul(K: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``out[b] = K[b] @ v[b]`` for real ``K`` (batch, r, c) and complex ``v`` (batch, c)."""
    parts = np.stack([v.real, v.imag], axis=2)
    out = np.matmul(K, parts)
    return out[..., 0] + 1j * out[..., 1]


class MWTransform:
    """Fast forward/inverse MW transforms and their exact adjoints."""

    def __init__(self, L: int):
        self.L = L = int(L)
        self.grid = build_grid(SamplingScheme.MW, L)
        n = self.n = 2 * L - 1
        delta = build_delta_table(L)
        # K[l, m', m+L-1] = sqrt((2l+1)/4pi) Delta^l_{m'm} Delta^l_{m',-s}, m' >= 0
        K = np.zeros((L, L, n))
        for el in range(L):
            h = delta.half[el]
            K[el, : el + 1, L - 1 - el : L + el] = (
                np.sqrt((2 * el + 1) / (4 * np.pi)) * h * h[:, el - SPIN, None]
            )
        # stored per m as (m, l, m') so both stages are batched real matmuls
        self._K = np.ascontiguousarray(K.transpose(2, 0, 1))
        self.m = np.arange(-(L - 1), L)
        self._ipow = 1j ** np.mod(self.m + SPIN, 4)
        self._parity = (-1.0) ** np.mod(self.m + SPIN, 2)
        # theta_t = 2 pi t / n + pi / n, so exp(i m' theta_t) is an FFT kernel times a shift
        self._shift = np.exp(1j * self.m * np.pi / n)
        mp = self.m
        self._W = 2 * np.pi * sin_theta_fourier_coefficients(mp[:, None] - mp[None, :])

    # -- shared stages -------------------------------------------------------

    def _coeffs_to_fourier(self, flm: np.ndarray) -> np.ndarray:
        """F[m, m'] = (-1)^s i^-(m+s) sum_l c_l Delta_{m'm} Delta_{m',-s} f_lm."""
        L = self.L
        C = _to_padded(flm, L)
        pos = _complex_matmul(self._K.transpose(0, 2, 1), C.T)
        F = np.empty((self.n, self.n), dtype=complex)
        F[:, L - 1 :] = pos
        # Delta_{-m',m} Delta_{-m',0} = (-1)^m Delta_{m',m} Delta_{m',0}
        F[:, : L - 1] = (pos[:, :0:-1]) * self._parity[:, None]
        return F * np.conj(self._ipow)[:, None]

    def _fourier_to_coeffs(self, G: np.ndarray) -> np.ndarray:
        """f_lm = (-1)^s i^(m+s) sum_{m'} c_l Delta_{m'm} Delta_{m',-s} G[m, m']."""
        L = self.L
        fold = G[:, L - 1 :].copy()
        fold[:, 1:] += G[:, : L - 1][:, ::-1] * self._parity[:, None]
        C = _complex_matmul(self._K, fold).T * self._ipow[None, :]
        return _from_padded(C, L)

    def _theta_synthesis(self, F: np.ndarray) -> np.ndarray:
        """[m, m'] -> [m, t] on the 2L-1 extended theta nodes, sum_{m'} F e^{i m' theta_t}."""
        A = np.fft.ifftshift(F * self._shift[None, :], axes=1)
        return np.fft.ifft(A, axis=1) * self.n

    def _theta_analysis(self, X: np.ndarray) -> np.ndarray:
        """[m, t] -> [m, m'], sum_t X e^{-i m' theta_t}."""
        A = np.fft.fftshift(np.fft.fft(X, axis=1), axes=1)
        return A * np.conj(self._shift)[None, :]

    def _phi_synthesis(self, Fm: np.ndarray) -> np.ndarray:
        """[m, t] -> [t, p], sum_m F_m e^{i m phi_p}."""
        return np.fft.ifft(np.fft.ifftshift(Fm.T, axes=1), axis=1) * self.n

    def _phi_analysis(self, x: np.ndarray) -> np.ndarray:
        """[t, p] -> [m, t], sum_p x e^{-i m phi_p}."""
        return np.fft.fftshift(np.fft.fft(x, axis=1), axes=1).T

    # -- operators -----------------------------------------------------------

    def inverse(self, flm: np.ndarray) -> np.ndarray:
        flm = _check_coeffs(flm, self.L)
        F = self._coeffs_to_fourier(flm)
        Fm_theta = self._theta_synthesis(F)
        # discard the out-of-domain half of the periodic theta extension
        return self._phi_synthesis(Fm_theta[:, : self.L])

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _check_image(x, self.grid)
        L, n = self.L, self.n
        Fm = self._phi_analysis(x) / n
        ext = np.empty((n, n), dtype=complex)
        ext[:, :L] = Fm
        # periodic extension theta_{2L-2-t} = 2 pi - theta_t
        ext[:, L:] = Fm[:, : L - 1][:, ::-1] * self._parity[:, None]
        F = self._theta_analysis(ext) / n
        G = F @ self._W
        return self._fourier_to_coeffs(G)

    def inverse_adjoint(self, x: np.ndarray) -> np.ndarray:
        x = _check_image(x, self.grid)
        L, n = self.L, self.n
        ext = np.zeros((n, n), dtype=complex)
        ext[:, :L] = self._phi_analysis(x)
        F = self._theta_analysis(ext)
        return self._fourier_to_coeffs(F)

    def forward_adjoint(self, flm: np.ndarray) -> np.ndarray:
        flm = _check_coeffs(flm, self.L)
        L, n = self.L, self.n
        G = self._coeffs_to_fourier(flm)
        F = G @ self._W.conj().T
        ext = self._theta_synthesis(F) / n
        Fm = ext[:, :L].copy()
        Fm[:, : L - 1] += ext[:, : L - 1 : -1] * self._parity[:, None]
        return self._phi_synthesis(Fm) / n


def _normalised_legendre(L: int, thetas: np.ndarray) -> np.ndarray:
    """P[t, l, m] = sqrt((2l+1)/4pi) sqrt((l-m)!/(l+m)!) P_l^m(cos theta_t), m >= 0, Condon-Shortley."""
    x = np.cos(thetas)
    s = np.sin(thetas)
    P = np.zeros((thetas.size, L, L))
    pmm = np.full(thetas.size, np.sqrt(1.0 / (4 * np.pi)))
    for m in range(L):
        if m > 0:
            pmm = -np.sqrt((2 * m + 1) / (2.0 * m)) * s * pmm
        P[:, m, m] = pmm
        if m + 1 < L:
            P[:, m + 1, m] = np.sqrt(2 * m + 3.0) * x * pmm
        for el in range(m + 2, L):
            a = np.sqrt((4.0 * el * el - 1) / (el * el - m * m))
            b = np.sqrt(((el - 1.0) ** 2 - m * m) / (4.0 * (el - 1) ** 2 - 1))
            P[:, el, m] = a * (x * P[:, el - 1, m] - b * P[:, el - 2, m])
    return P


class DHTransform:
    """Direct DH synthesis and quadrature analysis, with adjoints."""

    def __init__(self, L: int):
        self.L = L = int(L)
        self.grid = build_grid(SamplingScheme.DH, L)
        self.n = n = 2 * L - 1
        P = _normalised_legendre(L, self.grid.thetas)
        m = np.arange(-(L - 1), L)
        # lam[t, l, m+L-1]; Y_{l,-m} = (-1)^m conj(Y_lm)
        lam = np.zeros((self.grid.n_theta, L, n))
        lam[:, :, L - 1 :] = P
        lam[:, :, : L - 1] = P[:, :, :0:-1] * ((-1.0) ** np.abs(m[: L - 1]))[None, None, :]
        self._lam = lam
        self._q = quadrature_weights(self.grid).q

    def _synth(self, flm: np.ndarray) -> np.ndarray:
        C = _to_padded(flm, self.L)
        Fm = np.einsum("tlm,lm->tm", self._lam, C)
        return np.fft.ifft(np.fft.ifftshift(Fm, axes=1), axis=1) * self.n

    def _analyse(self, x: np.ndarray) -> np.ndarray:
        B = np.fft.fftshift(np.fft.fft(x, axis=1), axes=1)
        return _from_padded(np.einsum("tlm,tm->lm", self._lam, B), self.L)

    def inverse(self, flm: np.ndarray) -> np.ndarray:
        return self._synth(_check_coeffs(flm, self.L))

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = _check_image(x, self.grid)
        return self._analyse(x * self._q[:, None])

    def inverse_adjoint(self, x: np.ndarray) -> np.ndarray:
        return self._analyse(_check_image(x, self.grid))

    def forward_adjoint(self, flm: np.ndarray) -> np.ndarray:
        return self._synth(_check_coeffs(flm, self.L)) * self._q[:, None]


@lru_cache(maxsize=16)
def get_transform(scheme: SamplingScheme | str, L: int) -> MWTransform | DHTransform:
    scheme = SamplingScheme.parse(scheme)
    if scheme is SamplingScheme.MW:
        return MWTransform(L)
    return DHTransform(L)


def _band_limit_of(flm: np.ndarray) -> int:
    L = int(round(np.sqrt(np.asarray(flm).size)))
    if L * L != np.asarray(flm).size:
        raise ValueError(f"coefficient vector length {np.asarray(flm).size} is not a square")
    return L


def _band_limit_of_image(x: np.ndarray, scheme: SamplingScheme) -> int:
    n_theta = np.asarray(x).shape[0]
    return n_theta if scheme is SamplingScheme.MW else n_theta // 2


def mw_inverse(flm):
    return get_transform(SamplingScheme.MW, _band_limit_of(flm)).inverse(flm)


def mw_forward(x):
    return get_transform(SamplingScheme.MW, _band_limit_of_image(x, SamplingScheme.MW)).forward(x)


def mw_inverse_adjoint(x):
    L = _band_limit_of_image(x, SamplingScheme.MW)
    return get_transform(SamplingScheme.MW, L).inverse_adjoint(x)


def mw_forward_adjoint(flm):
    return get_transform(SamplingScheme.MW, _band_limit_of(flm)).forward_adjoint(flm)


def dh_inverse(flm):
    return get_transform(SamplingScheme.DH, _band_limit_of(flm)).inverse(flm)


def dh_forward(x):
    return get_transform(SamplingScheme.DH, _band_limit_of_image(x, SamplingScheme.DH)).forward(x)


def conj_sym_extend(half: np.ndarray, L: int | None = None, tol: float = 1e-12) -> np.ndarray:
    """Lift m >= 0 coefficients to the full set of a real signal."""
    half = np.asarray(half)
    if L is None:
        L = int(round((np.sqrt(8 * half.size + 1) - 1) / 2))
    if half.shape != (L * (L + 1) // 2,):
        raise ValueError(f"expected {L * (L + 1) // 2} half coefficients for L={L}")
    el, m = _half_layout(L)
    if np.any(np.abs(half[m == 0].imag) > tol):
        raise ValueError("m = 0 coefficients must be real for a real signal")
    full = np.zeros(L * L, dtype=complex)
    full[el * el + el + m] = half
    pos = m > 0
    full[el[pos] ** 2 + el[pos] - m[pos]] = (-1.0) ** m[pos] * np.conj(half[pos])
    full[el[~pos] ** 2 + el[~pos]] = half[~pos].real
    return full


def conj_sym_restrict(full: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`conj_sym_extend` under the real inner product ``Re <a, b>``."""
    full = np.asarray(full)
    L = _band_limit_of(full)
    el, m = _half_layout(L)
    out = full[el * el + el + m].astype(complex)
    pos = m > 0
    out[pos] += (-1.0) ** m[pos] * np.conj(full[el[pos] ** 2 + el[pos] - m[pos]])
    out[~pos] = out[~pos].real
    return out


@lru_cache(maxsize=None)
def _half_layout(L: int) -> tuple[np.ndarray, np.ndarray]:
    el = np.repeat(np.arange(L), np.arange(L) + 1)
    m = np.arange(L * (L + 1) // 2) - el * (el + 1) // 2
    return el, m


def band_limit(x: np.ndarray, grid: SphereGrid) -> np.ndarray:
    """Project a sample vector onto band-limited signals, ``Lambda Gamma x``."""
    tr = get_transform(grid.scheme, grid.L)
    out = tr.inverse(tr.forward(x))
    return out.real if np.isrealobj(x) else out
