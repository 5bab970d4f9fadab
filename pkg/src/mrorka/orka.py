"""Single-resolution object extraction and greedy multi-object peeling."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core import ObjectEstimate, as_grid, build_coupling, recover_appearance
from .errors import ParameterError
from .kgraph import DEFAULT_MEMORY_CAP, build_graph, longest_path

__all__ = ["OrkaConfig", "solve_single", "solve_greedy"]

log = logging.getLogger(__name__)


def _check_greedy(max_objects, residual_threshold):
    if max_objects < 0:
        raise ParameterError("max_objects must be nonnegative")
    if not 0 < residual_threshold < 1:
        raise ParameterError("residual_threshold must lie in (0, 1)")


@dataclass(frozen=True)
class OrkaConfig:
    """Parameters of the single-resolution solver.

    ``C`` bounds the shift change between neighbouring columns, ``K`` is the
    band of the approximated inverse and ``mu`` weights appearance changes.
    """

    C: int = 1
    K: int = 3
    mu: float = 1.0
    max_objects: int = 1
    residual_threshold: float = 0.01
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if self.C < 0:
            raise ParameterError(f"C must be nonnegative, got {self.C}")
        if self.K < 1:
            raise ParameterError(f"K must be at least 1, got {self.K}")
        if not self.mu >= 0:
            raise ParameterError(f"mu must be nonnegative, got {self.mu}")
        _check_greedy(self.max_objects, self.residual_threshold)


def solve_single(D, cfg: OrkaConfig) -> ObjectEstimate:
    """Best single object for ``D``: trellis path, then optimal appearance."""
    D = as_grid(D)
    graph = build_graph(D, cfg.C, cfg.K, cfg.mu, memory_cap=cfg.memory_cap)
    path, surrogate = longest_path(graph)
    log.info("orka: C=%d K=%d nodes=%d", cfg.C, graph.K, graph.node_count)
    est = recover_appearance(D, path, cfg.mu, build_coupling(D.shape[1], cfg.mu))
    est.surrogate = surrogate
    est.nodes = graph.node_count
    return est


def solve_greedy(D, cfg) -> tuple[list, np.ndarray]:
    """Extract objects one at a time until the residual is small.

    Works with either an :class:`OrkaConfig` or a
    :class:`~mrorka.multires.MultiresConfig`.  Stops after
    ``cfg.max_objects`` objects, once the residual energy drops to
    ``cfg.residual_threshold * ||D||^2``, or when an extraction stops making
    progress.
    """
    D = as_grid(D)
    if isinstance(cfg, OrkaConfig):
        solve = solve_single
    else:
        from .multires import solve_multires

        def solve(grid, c):
            return solve_multires(grid, c)[0]

    total = float(np.sum(D * D))
    residual = D.copy()
    energy = total
    objects = []
    while len(objects) < cfg.max_objects and energy > cfg.residual_threshold * total:
        est = solve(residual, cfg)
        updated = residual - est.reconstruct()
        new_energy = float(np.sum(updated * updated))
        if new_energy >= energy:
            log.info("greedy: no further progress after %d objects", len(objects))
            break
        objects.append(est)
        residual, energy = updated, new_energy
        log.info("greedy: object %d, residual energy %.6g", len(objects), energy)
    return objects, residual
