"""Shift operators, the coupling matrix and appearance recovery.

Data grids are plain ``(M, N)`` float arrays: column ``k`` holds measurement
``k`` and is treated as circular along the row (sample) axis.  A shift path
assigns one signed integer to every column; ``shift_columns`` moves column
``k`` down by ``path[k]`` samples with wraparound.

For a fixed path the appearance ``U`` minimizing

    ||D - S_path(U)||_F^2 + mu * sum_k ||U[:, k] - U[:, k+1]||^2

is ``S_{-path}(D) A^{-1}`` with ``A`` the tridiagonal coupling matrix, and
the minimum equals ``||D||_F^2 - <A^{-1}, G>`` where ``G`` is the Gram matrix
of the aligned columns.  The solvers maximize ``<A^{-1}, G>`` (or its
bandlimited version), so larger objective values are better throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParameterError, ShapeError

__all__ = [
    "ShiftPath",
    "CouplingMatrix",
    "ObjectEstimate",
    "as_grid",
    "shift_columns",
    "solve_tridiagonal",
    "build_coupling",
    "objective",
    "penalized_residual",
    "recover_appearance",
]


def as_grid(D) -> np.ndarray:
    """Validate and return ``D`` as a 2-D float64 array."""
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2:
        raise ShapeError(f"data grid must be 2-D, got shape {D.shape}")
    if D.shape[0] < 2 or D.shape[1] < 2:
        raise ShapeError(f"data grid needs at least 2 rows and 2 columns, got {D.shape}")
    if not np.all(np.isfinite(D)):
        raise ShapeError("data grid contains non-finite values")
    return D


@dataclass(frozen=True)
class ShiftPath:
    """Integer column shifts at resolution ``2**scale`` of the original grid."""

    entries: np.ndarray
    scale: int = 0

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 1:
            raise ShapeError("shift path must be one-dimensional")
        if entries.size and not np.all(entries == np.round(entries)):
            raise ParameterError("shift path entries must be integers")
        if self.scale < 0:
            raise ParameterError("scale must be nonnegative")
        entries = entries.astype(np.int64)
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.entries)

    def is_lipschitz(self, C) -> bool:
        return bool(np.all(np.abs(self.steps) <= C))

    def rescaled(self) -> tuple[Fraction, ...]:
        """Physical shifts ``entries / 2**scale`` as exact fractions."""
        den = 2**self.scale
        return tuple(Fraction(int(v), den) for v in self.entries)

    def __eq__(self, other):
        if not isinstance(other, ShiftPath):
            return NotImplemented
        return self.scale == other.scale and np.array_equal(self.entries, other.entries)

    def __hash__(self):
        return hash((self.scale, self.entries.tobytes()))


def shift_columns(D, path) -> np.ndarray:
    """Cyclically shift column ``k`` of ``D`` down by ``path[k]`` rows."""
    D = np.asarray(D, dtype=np.float64)
    if isinstance(path, ShiftPath):
        path = path.entries
    path = np.asarray(path, dtype=np.int64)
    if D.ndim != 2 or path.shape != (D.shape[1],):
        raise ShapeError(
            f"path of shape {path.shape} does not match grid of shape {D.shape}"
        )
    M = D.shape[0]
    rows = (np.arange(M)[:, None] - path[None, :]) % M
    return np.take_along_axis(D, rows, axis=0)


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Solve ``T x = rhs`` for tridiagonal ``T`` by forward/backward elimination.

    ``lower`` and ``upper`` have length ``n - 1``; ``rhs`` may be a vector or
    an ``(n, m)`` matrix of right-hand sides.  No pivoting is done, so ``T``
    should be diagonally dominant.
    """
    lower = np.asarray(lower, dtype=np.float64)
    diag = np.asarray(diag, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    n = diag.shape[0]
    if lower.shape != (n - 1,) or upper.shape != (n - 1,) or rhs.shape[0] != n:
        raise ShapeError("inconsistent tridiagonal system dimensions")

    cp = np.empty(n)
    dp = np.empty(rhs.shape)
    cp[0] = upper[0] / diag[0] if n > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * cp[i - 1]
        if i < n - 1:
            cp[i] = upper[i] / denom
        dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        dp[i] -= cp[i] * dp[i + 1]
    return dp


@dataclass(frozen=True)
class CouplingMatrix:
    """Tridiagonal coupling matrix, its inverse and the K-banded inverse."""

    N: int
    mu: float
    K: int
    diag: np.ndarray = field(repr=False)
    offdiag: np.ndarray = field(repr=False)
    inverse: np.ndarray = field(repr=False)
    banded: np.ndarray = field(repr=False)

    @property
    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def solve(self, rhs) -> np.ndarray:
        return solve_tridiagonal(self.offdiag, self.diag, self.offdiag, rhs)


def _coupling_bands(N, mu):
    diag = np.full(N, 1.0 + 2.0 * mu)
    diag[0] = diag[-1] = 1.0 + mu
    return diag, np.full(N - 1, -mu)


def band_truncate(matrix, K) -> np.ndarray:
    """Zero every entry farther than ``K`` from the main diagonal."""
    n = matrix.shape[0]
    idx = np.arange(n)
    return np.where(np.abs(idx[:, None] - idx[None, :]) <= K, matrix, 0.0)


def build_coupling(N: int, mu: float, K: int | None = None) -> CouplingMatrix:
    """Build ``A(N, mu)`` with its inverse and ``K``-bandlimited inverse.

    ``K=None`` keeps the full band (``K = N - 1``).
    """
    N = int(N)
    if N < 2:
        raise ParameterError(f"coupling matrix needs N >= 2, got {N}")
    if not mu >= 0:
        raise ParameterError(f"mu must be nonnegative, got {mu}")
    if K is None:
        K = N - 1
    if not 0 <= K <= N - 1:
        raise ParameterError(f"band K must lie in [0, {N - 1}], got {K}")
    diag, off = _coupling_bands(N, float(mu))
    inv = solve_tridiagonal(off, diag, off, np.eye(N))
    # the elimination is not exactly symmetric in floating point
    inv = 0.5 * (inv + inv.T)
    for arr in (diag, off, inv):
        arr.setflags(write=False)
    banded = band_truncate(inv, K)
    banded.setflags(write=False)
    return CouplingMatrix(N, float(mu), int(K), diag, off, inv, banded)


def objective(D, path, Ainv) -> float:
    """Return ``<Ainv, S_{-path}(D)^T S_{-path}(D)>`` (to be maximized)."""
    D = np.asarray(D, dtype=np.float64)
    Ainv = np.asarray(Ainv, dtype=np.float64)
    N = D.shape[1]
    if Ainv.shape != (N, N):
        raise ShapeError(f"coefficient matrix must be {N}x{N}, got {Ainv.shape}")
    aligned = shift_columns(D, -_entries(path))
    return float(np.sum(Ainv * (aligned.T @ aligned)))


def penalized_residual(D, path, U, mu) -> float:
    """Value of the data-fit plus total-change functional at ``(path, U)``."""
    D = np.asarray(D, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if U.shape != D.shape:
        raise ShapeError("appearance and data must have the same shape")
    fit = np.sum((D - shift_columns(U, _entries(path))) ** 2)
    change = np.sum(np.diff(U, axis=1) ** 2)
    return float(fit + mu * change)


def _entries(path):
    return path.entries if isinstance(path, ShiftPath) else np.asarray(path, dtype=np.int64)


@dataclass
class ObjectEstimate:
    """One recovered object: appearance ``U`` placed by ``path``.

    ``U`` lives on the grid the path refers to, which has ``2**path.scale``
    times as many rows as the input when the path was refined past the
    original resolution.  ``objective`` is the penalized residual at the
    solution and ``surrogate`` the bandlimited score the path maximized.
    """

    appearance: np.ndarray
    path: ShiftPath
    objective: float
    residual_energy: float
    surrogate: float | None = None
    wavelet: str | None = None
    nodes: int = 0
    trace: object | None = field(default=None, repr=False)

    def placed(self) -> np.ndarray:
        """``S_path(U)`` on the path's own grid."""
        return shift_columns(self.appearance, self.path.entries)

    def reconstruct(self) -> np.ndarray:
        """The object at the resolution of the original data."""
        out = self.placed()
        if self.path.scale:
            from .wavelet import get_filter, lowpass

            f = get_filter(self.wavelet or "db6")
            for _ in range(self.path.scale):
                out = lowpass(out, f)
        return out


def recover_appearance(D, path, mu: float, coupling: CouplingMatrix | None = None,
                       scale: int = 0) -> ObjectEstimate:
    """Optimal appearance for a fixed path (convex quadratic in ``U``)."""
    D = as_grid(D)
    N = D.shape[1]
    if coupling is None or coupling.N != N or coupling.mu != mu:
        coupling = build_coupling(N, mu)
    if not isinstance(path, ShiftPath):
        path = ShiftPath(path, scale)
    aligned = shift_columns(D, -path.entries)
    # U A = aligned  <=>  A U^T = aligned^T  (A symmetric)
    U = coupling.solve(aligned.T).T
    residual = float(np.sum((D - shift_columns(U, path.entries)) ** 2))
    value = residual + mu * float(np.sum(np.diff(U, axis=1) ** 2))
    return ObjectEstimate(U, path, value, residual)
