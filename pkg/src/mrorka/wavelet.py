"""Column-wise periodized orthogonal wavelet transform.

Analysis uses the fixed phase

    low[m]  = sum_n h[n] v[(2m + n) mod M]
    high[m] = sum_n g[n] v[(2m + n) mod M],   g[n] = (-1)**n h[2p - 1 - n]

so that shifting a column by an even amount ``2s`` shifts both coefficient
vectors by ``s``.  All functions act on every column of a 2-D array (a 1-D
array is treated as a single column).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ResolutionError, ShapeError

__all__ = [
    "WaveletFilter",
    "FILTERS",
    "get_filter",
    "dwt",
    "idwt",
    "lowpass",
    "upsample_zero_highpass",
    "analysis_matrix",
    "build_pyramid",
    "Pyramid",
    "max_level",
]

# Daubechies scaling filters, normalized to sum sqrt(2).
_DB_TAPS = {
    "haar": [0.7071067811865476, 0.7071067811865476],
    "db2": [
        0.48296291314453416,
        0.8365163037378079,
        0.2241438680420134,
        -0.12940952255126037,
    ],
    "db6": [
        0.11154074335010947,
        0.49462389039845306,
        0.7511339080210954,
        0.31525035170919763,
        -0.22626469396543983,
        -0.12976686756726194,
        0.09750160558732304,
        0.027522865530305727,
        -0.03158203931748603,
        0.0005538422011614961,
        0.004777257510945511,
        -0.0010773010853084796,
    ],
}
_ALIASES = {"db1": "haar"}


@dataclass(frozen=True)
class WaveletFilter:
    name: str
    lowpass: np.ndarray = field(repr=False)

    @property
    def highpass(self) -> np.ndarray:
        h = self.lowpass
        sign = np.where(np.arange(len(h)) % 2 == 0, 1.0, -1.0)
        return sign * h[::-1]

    def __len__(self):
        return len(self.lowpass)


FILTERS = {name: WaveletFilter(name, np.array(taps)) for name, taps in _DB_TAPS.items()}


def get_filter(name) -> WaveletFilter:
    if isinstance(name, WaveletFilter):
        return name
    key = _ALIASES.get(str(name).lower(), str(name).lower())
    try:
        return FILTERS[key]
    except KeyError:
        raise ParameterError(
            f"unknown wavelet {name!r}; choose from {sorted(FILTERS) + sorted(_ALIASES)}"
        ) from None


def _columns(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[:, None], True
    if x.ndim != 2:
        raise ShapeError("expected a vector or a 2-D grid")
    return x, False


def dwt(x, f) -> tuple[np.ndarray, np.ndarray]:
    """One analysis level on every column: returns ``(low, high)``."""
    f = get_filter(f)
    X, vec = _columns(x)
    M = X.shape[0]
    if M % 2:
        raise ShapeError(f"wavelet analysis needs an even number of rows, got {M}")
    low = np.zeros((M // 2, X.shape[1]))
    high = np.zeros_like(low)
    for n, (hn, gn) in enumerate(zip(f.lowpass, f.highpass)):
        # rows 2m + n, wrapped
        tap = np.roll(X, -n, axis=0)[::2]
        low += hn * tap
        high += gn * tap
    if vec:
        return low[:, 0], high[:, 0]
    return low, high


def idwt(low, high, f) -> np.ndarray:
    """Exact inverse (transpose) of :func:`dwt`."""
    f = get_filter(f)
    L, vec = _columns(low)
    H, _ = _columns(high)
    if L.shape != H.shape:
        raise ShapeError(f"coefficient shapes differ: {L.shape} vs {H.shape}")
    M = 2 * L.shape[0]
    out = np.zeros((M, L.shape[1]))
    up_low = np.zeros_like(out)
    up_high = np.zeros_like(out)
    up_low[::2] = L
    up_high[::2] = H
    for n, (hn, gn) in enumerate(zip(f.lowpass, f.highpass)):
        out += np.roll(hn * up_low + gn * up_high, n, axis=0)
    return out[:, 0] if vec else out


def lowpass(x, f) -> np.ndarray:
    return dwt(x, f)[0]


def upsample_zero_highpass(x, f) -> np.ndarray:
    """Synthesize with zero detail coefficients: doubles the row count."""
    X = np.asarray(x, dtype=np.float64)
    return idwt(X, np.zeros_like(X), f)


def analysis_matrix(M: int, f) -> np.ndarray:
    """The ``M x M`` matrix ``W`` with ``W v = (low; high)``."""
    low, high = dwt(np.eye(M), f)
    return np.vstack([low, high])


def max_level(M: int) -> int:
    """Largest ``L`` such that ``2**L`` divides ``M``."""
    M = int(M)
    L = 0
    while M % 2 == 0 and M > 1:
        M //= 2
        L += 1
    return L


@dataclass
class Pyramid:
    """Lowpass grids ``levels[l]`` with ``M / 2**l`` rows, ``levels[0]`` the input."""

    levels: list
    wavelet: WaveletFilter

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def __getitem__(self, level):
        return self.levels[level]


def build_pyramid(D, f, L: int) -> Pyramid:
    f = get_filter(f)
    D = np.asarray(D, dtype=np.float64)
    if L < 0:
        raise ParameterError("pyramid depth must be nonnegative")
    if D.shape[0] % (2**L):
        raise ResolutionError(
            f"{D.shape[0]} rows are not divisible by 2**{L}", max_level(D.shape[0])
        )
    levels = [D]
    for _ in range(L):
        levels.append(lowpass(levels[-1], f))
    return Pyramid(levels, f)
