"""Coarse-to-fine extraction over a wavelet lowpass pyramid.

The path is first found on the coarsest lowpass grid with ``C = 1``.  Every
finer level doubles the previous path, pre-aligns its grid with it and solves
again with ``C = 1`` for a correction, so that

    path[l] = 2 * path[l + 1] + update[l],   update steps in {-1, 0, 1}.

Past the original resolution the grid is refined by synthesizing with zero
detail coefficients; after ``J`` such levels the path lives on a grid
``2**J`` times finer and the physical shift is ``path / 2**J``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import ObjectEstimate, ShiftPath, as_grid, build_coupling, recover_appearance, shift_columns
from .errors import ParameterError
from .kgraph import DEFAULT_MEMORY_CAP, build_graph, longest_path
from .orka import _check_greedy
from .wavelet import build_pyramid, get_filter, upsample_zero_highpass

__all__ = [
    "MultiresConfig",
    "LevelRecord",
    "RefinementTrace",
    "select_levels",
    "solve_multires",
    "rescale_path",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiresConfig:
    """Parameters of the multiresolution solver.

    ``Cprime`` is the Lipschitz constant at the original resolution and ``J``
    the number of zero-detail upsampling levels.  ``L`` overrides the
    automatically selected pyramid depth.
    """

    Cprime: int = 1
    J: int = 0
    K: int = 3
    mu: float = 1.0
    wavelet: str = "db6"
    L: int | None = None
    max_objects: int = 1
    residual_threshold: float = 0.01
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if self.Cprime < 1:
            raise ParameterError(f"Cprime must be at least 1, got {self.Cprime}")
        if self.J < 0:
            raise ParameterError(f"J must be nonnegative, got {self.J}")
        if self.K < 1:
            raise ParameterError(f"K must be at least 1, got {self.K}")
        if not self.mu >= 0:
            raise ParameterError(f"mu must be nonnegative, got {self.mu}")
        if self.L is not None and self.L < 0:
            raise ParameterError(f"L must be nonnegative, got {self.L}")
        get_filter(self.wavelet)
        _check_greedy(self.max_objects, self.residual_threshold)


@dataclass
class LevelRecord:
    level: int
    path: np.ndarray
    update: np.ndarray
    surrogate: float
    nodes: int
    rows: int


@dataclass
class RefinementTrace:
    """Per-level paths of one coarse-to-fine run, coarsest first."""

    L: int
    J: int
    records: list = field(default_factory=list)

    @property
    def final(self) -> ShiftPath:
        return ShiftPath(self.records[-1].path, self.J)

    @property
    def nodes(self) -> int:
        return sum(r.nodes for r in self.records)

    def path_at(self, level: int) -> np.ndarray:
        for r in self.records:
            if r.level == level:
                return r.path
        raise KeyError(level)

    def step_digits(self) -> np.ndarray:
        """``alpha[l, k] = update_l[k+1] - update_l[k]``, rows ordered by level L..-J."""
        return np.array([np.diff(r.update) for r in self.records])

    def reconstructed_steps(self) -> np.ndarray:
        """Final-level steps rebuilt from the per-level digits."""
        digits = self.step_digits()
        weights = np.array([2 ** (r.level + self.J) for r in self.records])
        return (weights[:, None] * digits).sum(axis=0)


def select_levels(Cprime, J: int, M: int | None = None, filter_length: int | None = None) -> int:
    """Pyramid depth ``ceil(log2(Cprime + 2**-J)) - 1`` (at least 0).

    With ``M`` and ``filter_length`` given, the depth is reduced so that the
    coarsest grid keeps at least ``filter_length`` rows.
    """
    if Cprime < 1:
        raise ParameterError(f"Cprime must be at least 1, got {Cprime}")
    x = Fraction(Cprime) + Fraction(1, 2**J)
    e = 0
    while Fraction(2**e) < x:
        e += 1
    L = max(0, e - 1)
    if M is not None and filter_length is not None:
        while L > 0 and M / 2**L < filter_length:
            L -= 1
    return L


def rescale_path(path: ShiftPath) -> tuple[Fraction, ...]:
    """Exact physical shifts ``entries / 2**scale``."""
    return path.rescaled()


def _solve_level(grid, cfg, record_level, coarse):
    aligned = grid if coarse is None else shift_columns(grid, -coarse)
    graph = build_graph(aligned, 1, cfg.K, cfg.mu, memory_cap=cfg.memory_cap)
    update, value = longest_path(graph)
    path = update.entries if coarse is None else coarse + update.entries
    log.info("multires: level %d rows=%d nodes=%d", record_level, grid.shape[0], graph.node_count)
    return LevelRecord(record_level, np.asarray(path), update.entries, value,
                       graph.node_count, grid.shape[0])


def solve_multires(D, cfg: MultiresConfig) -> tuple[ObjectEstimate, RefinementTrace]:
    D = as_grid(D)
    f = get_filter(cfg.wavelet)
    L = cfg.L if cfg.L is not None else select_levels(cfg.Cprime, cfg.J, D.shape[0], len(f))
    pyramid = build_pyramid(D, f, L)
    trace = RefinementTrace(L, cfg.J)

    trace.records.append(_solve_level(pyramid[L], cfg, L, None))
    grid = pyramid[L]
    for level in range(L - 1, -cfg.J - 1, -1):
        grid = pyramid[level] if level >= 0 else upsample_zero_highpass(grid, f)
        coarse = 2 * trace.records[-1].path
        trace.records.append(_solve_level(grid, cfg, level, coarse))

    final = trace.final
    limit = 2**cfg.J * cfg.Cprime
    worst = int(np.max(np.abs(final.steps))) if len(final) > 1 else 0
    if worst > limit:
        log.warning("multires: final step %d exceeds 2**J * Cprime = %d", worst, limit)

    est = recover_appearance(grid, final, cfg.mu, build_coupling(D.shape[1], cfg.mu))
    est.surrogate = trace.records[-1].surrogate
    est.wavelet = f.name
    est.nodes = trace.nodes
    est.trace = trace
    return est, trace


def node_bound(N: int, K: int, L: int, J: int) -> int:
    """Upper bound ``(L + J + 1) * N * 3**K`` on the trellis nodes of one run."""
    return (L + J + 1) * N * 3 ** min(K, N - 1)

