"""Wigner small-d matrices at pi/2 via the Trapani-Navaza recursion."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True, eq=False)
class DeltaTable:
    """``d^l_{m'm}(pi/2)`` for every ``l < L``.

    Only rows ``m' >= 0`` are stored: ``half[l]`` has shape ``(l+1, 2l+1)`` with
    row index ``m'`` and column index ``m + l``. Negative rows follow from
    ``Delta_{-m',m} = (-1)^(l+m) Delta_{m',m}``.
    """

    L: int
    half: tuple[np.ndarray, ...]

    def full(self, el: int) -> np.ndarray:
        """Full ``(2l+1, 2l+1)`` table indexed ``[m'+l, m+l]``."""
        h = self.half[el]
        sign = (-1.0) ** (el + np.arange(-el, el + 1))
        neg = h[:0:-1] * sign[None, :]
        return np.vstack([neg, h])

    def __call__(self, el: int, mp: int, m: int) -> float:
        if abs(mp) > el or abs(m) > el:
            return 0.0
        if mp >= 0:
            return float(self.half[el][mp, m + el])
        return float((-1) ** (el + m) * self.half[el][-mp, m + el])


@lru_cache(maxsize=8)
def build_delta_table(L: int) -> DeltaTable:
    L = int(L)
    if L < 1:
        raise ValueError(f"band-limit must be >= 1, got {L}")
    tables = [np.ones((1, 1))]
    for el in range(1, L):
        prev = tables[-1]
        c = el
        D = np.zeros((el + 1, 2 * el + 1))
        # top row m' = l from row l-1 of the previous degree
        D[el, c] = -np.sqrt((2 * el - 1) / (2 * el)) * prev[el - 1, el - 1]
        m = np.arange(1, el + 1)
        D[el, c + 1 :] = (
            np.sqrt(el * (2 * el - 1) / (2.0 * (el + m) * (el + m - 1)))
            * prev[el - 1, el - 1 + m - 1]
        )
        # three-term downward recursion in m' for m >= 0
        mpos = np.arange(el + 1)
        for mp in range(el - 1, -1, -1):
            a = 2.0 * mpos / np.sqrt((el - mp) * (el + mp + 1))
            row = a * D[mp + 1, c:]
            if mp + 2 <= el:
                b = np.sqrt((el - mp - 1) * (el + mp + 2) / ((el - mp) * (el + mp + 1)))
                row -= b * D[mp + 2, c:]
            D[mp, c:] = row
        # Delta_{m',-m} = (-1)^(l+m') Delta_{m',m}
        sign = (-1.0) ** (el + np.arange(el + 1))
        D[:, :c] = (D[:, c + 1 :] * sign[:, None])[:, ::-1]
        tables.append(D)
    for t in tables:
        t.setflags(write=False)
    return DeltaTable(L, tuple(tables))
