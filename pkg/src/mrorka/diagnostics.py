"""Error terms of one coarse-to-fine step and their upper bounds.

For a fine path ``lam = 2 * coarse + rest`` (``rest`` in ``{-1, 0, 1}``) the
gap between the fine bandlimited objective and the one seen on the lowpass
grid splits into a shift-mismatch part and a highpass part:

    |F(D, lam) - F(low, coarse)|
        <= |F(D, lam) - F(D, 2 coarse)| + |F(D, 2 coarse) - F(low, coarse)|

where ``F(X, p) = <Ainv_K, S_{-p}(X)^T S_{-p}(X)>``.  The first part is
bounded by ``sum |Ainv_K[j,k]| ||D_j|| ||D_k - S_{rest_k - rest_j}(D_k)||``
and the second, which equals ``|F(high, coarse)|``, by
``||Ainv_K||_F ||high||_F^2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import as_grid, build_coupling, objective
from .errors import ParameterError, ShapeError
from .wavelet import build_pyramid, dwt, get_filter, upsample_zero_highpass

__all__ = [
    "BoundReport",
    "bound_shift_mismatch",
    "bound_highpass",
    "bound_report",
    "energy_split",
]


@dataclass(frozen=True)
class BoundReport:
    lhs11: float
    rhs13: float
    lhs12: float
    rhs14: float
    total_gap: float
    scale: float

    def holds(self, rel: float = 1e-9) -> bool:
        slack = rel * self.scale
        return (
            self.lhs11 <= self.rhs13 + slack
            and self.lhs12 <= self.rhs14 + slack
            and self.total_gap <= self.lhs11 + self.lhs12 + slack
        )

    def as_dict(self) -> dict:
        d = asdict(self)
        d.pop("scale")
        return d


def _banded(N, K, mu):
    return build_coupling(N, mu, min(int(K), N - 1)).banded


def _paths(lam, coarse, strict=True):
    lam = np.asarray(getattr(lam, "entries", lam), dtype=np.int64)
    coarse = np.asarray(getattr(coarse, "entries", coarse), dtype=np.int64)
    if lam.shape != coarse.shape:
        raise ShapeError("fine and coarse paths differ in length")
    rest = lam - 2 * coarse
    if strict and np.any(np.abs(rest) > 1):
        raise ParameterError("fine path is not 2 * coarse + {-1, 0, 1}")
    return lam, coarse, rest


def bound_shift_mismatch(D, lam, coarse, K: int, mu: float, strict: bool = True) -> tuple[float, float]:
    """Mismatch ``|F(D, lam) - F(D, 2 coarse)|`` and its bound.

    The bound holds for any integer ``rest``; ``strict=False`` accepts the
    drifting residuals of a refinement trace, whose updates only have unit
    steps.
    """
    D = as_grid(D)
    lam, coarse, rest = _paths(lam, coarse, strict)
    Ak = _banded(D.shape[1], K, mu)
    lhs = abs(objective(D, lam, Ak) - objective(D, 2 * coarse, Ak))
    norms = np.linalg.norm(D, axis=0)
    N = D.shape[1]
    rhs = 0.0
    for j in range(N):
        for k in np.flatnonzero(Ak[j]):
            moved = np.roll(D[:, k], rest[k] - rest[j])
            rhs += abs(Ak[j, k]) * norms[j] * np.linalg.norm(D[:, k] - moved)
    return float(lhs), float(rhs)


def bound_highpass(D, coarse, K: int, mu: float, f="db6", split=None) -> tuple[float, float]:
    """Highpass gap ``|F(D, 2 coarse) - F(low, coarse)|`` and its bound.

    ``split`` may supply ``(low, high)`` when the decomposition of ``D`` is
    known exactly, e.g. for grids synthesized with zero detail coefficients.
    """
    D = as_grid(D)
    if D.shape[0] % 2:
        raise ShapeError("highpass bound needs an even number of rows")
    coarse = np.asarray(getattr(coarse, "entries", coarse), dtype=np.int64)
    low, high = split if split is not None else dwt(D, get_filter(f))
    Ak = _banded(D.shape[1], K, mu)
    lhs = abs(objective(D, 2 * coarse, Ak) - objective(low, coarse, Ak))
    rhs = np.linalg.norm(Ak) * float(np.sum(np.asarray(high) ** 2))
    return float(lhs), float(rhs)


def energy_split(D, coarse, K: int, mu: float, f="db6") -> tuple[float, float, float]:
    """``F(D, 2 coarse)``, ``F(low, coarse)`` and ``F(high, coarse)``.

    The first equals the sum of the other two for an orthogonal wavelet.
    """
    D = as_grid(D)
    coarse = np.asarray(getattr(coarse, "entries", coarse), dtype=np.int64)
    low, high = dwt(D, get_filter(f))
    Ak = _banded(D.shape[1], K, mu)
    return (
        objective(D, 2 * coarse, Ak),
        objective(low, coarse, Ak),
        objective(high, coarse, Ak),
    )


def bound_report(D, lam, coarse, K: int, mu: float, f="db6", split=None,
                 strict: bool = True) -> BoundReport:
    D = as_grid(D)
    lam, coarse, _ = _paths(lam, coarse, strict)
    f = get_filter(f)
    low = split[0] if split is not None else dwt(D, f)[0]
    lhs11, rhs13 = bound_shift_mismatch(D, lam, coarse, K, mu, strict)
    lhs12, rhs14 = bound_highpass(D, coarse, K, mu, f, split)
    Ak = _banded(D.shape[1], K, mu)
    gap = abs(objective(D, lam, Ak) - objective(low, coarse, Ak))
    scale = float(np.sum(D * D)) * float(np.linalg.norm(Ak))
    return BoundReport(lhs11, rhs13, lhs12, rhs14, float(gap), scale)


def trace_bounds(D, trace, K: int, mu: float, f="db6") -> list:
    """``(level, BoundReport)`` for every refinement step of a multires trace.

    The grid of level ``l`` is rebuilt from ``D``; its lowpass part is the
    grid of level ``l + 1``.  Upsampled levels have exactly zero detail.
    """
    f = get_filter(f)
    D = as_grid(D)
    pyramid = build_pyramid(D, f, trace.L)
    grids = {l: pyramid[l] for l in range(trace.L + 1)}
    for l in range(-1, -trace.J - 1, -1):
        grids[l] = upsample_zero_highpass(grids[l + 1], f)
    out = []
    for prev, rec in zip(trace.records, trace.records[1:]):
        l = rec.level
        split = (grids[l + 1], np.zeros_like(grids[l + 1])) if l < 0 else None
        rep = bound_report(grids[l], rec.path, prev.path, K, mu, f, split, strict=False)
        out.append((l, rep))
    return out

