"""K-approximation trellis and its longest path.

Layer ``t`` (``t = 0 .. N-1``) of the trellis corresponds to column ``t``.  A
node in layer ``t`` is the window of the last ``min(t, K)`` steps
``path[i] - path[i-1]`` leading up to column ``t``; every step lies in
``[-C, C]``.  Moving to layer ``t + 1`` appends one step and, once the window
is full, drops the oldest one.

With the bandlimited inverse only pairs of columns at distance ``<= K``
interact, and all relative shifts ``path[t-d] - path[t]`` for ``d <= K`` are
known from the window that ends at column ``t``.  The edge into such a node
therefore carries

    2 * sum_{d=1}^{min(K, t)} Ainv[t-d, t] * c_{t-d,t}(path[t-d] - path[t])

with ``c_{j,k}(m) = <D[:, j], S_m(D[:, k])>``.  Summing these along a path
and adding the path-independent diagonal term
``sum_k Ainv[k, k] ||D[:, k]||^2`` gives exactly the bandlimited objective.

Steps are indexed in the order ``0, -1, 1, -2, 2, ...``; node indices are
base-``2C+1`` numbers whose most significant digit is the oldest step.  The
trellis is never materialized: layer tables are generated on the fly and only
the argmax over the dropped step is stored (bit packed) for backtracking.

Ties are broken towards smaller ``|step|`` and then towards the negative
step, comparing the newest step first.  :func:`brute_force_path` uses the
same rule.
"""

from __future__ import annotations

import itertools
import logging
import math
import os
from dataclasses import dataclass, field

import numba
import numpy as np

from .core import ShiftPath, as_grid, build_coupling, objective
from .errors import InstanceTooLargeError, ParameterError, ResourceError

__all__ = [
    "DEFAULT_MEMORY_CAP",
    "KGraph",
    "step_values",
    "precompute_correlations",
    "build_graph",
    "longest_path",
    "brute_force_path",
    "admissible_paths",
    "evaluate",
]

log = logging.getLogger(__name__)

DEFAULT_MEMORY_CAP = 2 * 1024**3
BRUTE_FORCE_LIMIT = 10**7
# multiply-adds above which correlations switch to the FFT route
_DIRECT_WORK_LIMIT = 2 * 10**9


def _configure_threads():
    if "NUMBA_THREADING_LAYER" not in os.environ:
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    value = os.environ.get("ORKA_THREADS")
    if value:
        try:
            numba.set_num_threads(max(1, min(int(value), numba.config.NUMBA_NUM_THREADS)))
        except ValueError:
            log.warning("ignoring invalid ORKA_THREADS=%r", value)


_configure_threads()


def step_values(C: int) -> np.ndarray:
    """Step values in preference order ``0, -1, 1, ..., -C, C``."""
    i = np.arange(2 * C + 1)
    return np.where(i % 2 == 1, -1, 1) * ((i + 1) // 2)


def _direct_correlations(D, C, K):
    M, N = D.shape
    width = 2 * C * K + 1
    table = np.full((K, N, width), np.nan)
    for d in range(1, K + 1):
        left, right = D[:, : N - d], D[:, d:]
        for m in range(-C * d, C * d + 1):
            table[d - 1, : N - d, m + C * K] = np.einsum(
                "ij,ij->j", left, np.roll(right, m, axis=0)
            )
    return table


def _fft_correlations(D, C, K):
    M, N = D.shape
    width = 2 * C * K + 1
    table = np.full((K, N, width), np.nan)
    F = np.fft.rfft(D, axis=0)
    for d in range(1, K + 1):
        # r[m] = sum_i a[i] b[i - m]
        r = np.fft.irfft(F[:, : N - d] * np.conj(F[:, d:]), n=M, axis=0)
        m = np.arange(-C * d, C * d + 1)
        # mixed indexing puts the shift axis first
        table[d - 1, : N - d, m + C * K] = r[m % M]
    return table


def precompute_correlations(D, C: int, K: int, method: str = "auto") -> np.ndarray:
    """Cyclic cross-correlations of nearby columns.

    Returns ``table`` of shape ``(K, N, 2CK + 1)`` with
    ``table[d-1, j, m + C*K] = <D[:, j], S_m(D[:, j+d])>`` for ``j + d < N``
    and ``|m| <= C*d``; unused entries are NaN.  ``method`` is ``"direct"``,
    ``"fft"`` or ``"auto"`` (direct unless the grid is large).
    """
    D = np.asarray(D, dtype=np.float64)
    if C < 0 or K < 1:
        raise ParameterError(f"need C >= 0 and K >= 1, got C={C}, K={K}")
    if method == "auto":
        work = D.size * sum(2 * C * d + 1 for d in range(1, K + 1))
        method = "direct" if work <= _DIRECT_WORK_LIMIT else "fft"
    if method == "direct":
        return _direct_correlations(D, C, K)
    if method == "fft":
        return _fft_correlations(D, C, K)
    raise ParameterError(f"unknown correlation method {method!r}")


def _pack_layout(B):
    bits = max(1, math.ceil(math.log2(B)))
    if bits > 8:
        raise ParameterError("Lipschitz constant too large (2C+1 must be <= 256)")
    per = 8 // bits
    return bits, per


def _memory_estimate(N, B, K):
    full = B**K
    _, per = _pack_layout(B)
    n_full = max(0, N - 1 - K)
    return 3 * 8 * full + 4 * full + n_full * (-(-(B ** (K - 1)) // per))


@dataclass
class KGraph:
    """Implicit K-approximation trellis for one data grid."""

    shape: tuple
    C: int
    K: int
    mu: float
    banded: np.ndarray = field(repr=False)
    correlations: np.ndarray = field(repr=False)
    diagonal_constant: float = 0.0

    @property
    def N(self) -> int:
        return self.shape[1]

    @property
    def base(self) -> int:
        return 2 * self.C + 1

    @property
    def steps(self) -> np.ndarray:
        return step_values(self.C)

    def layer_width(self, t: int) -> int:
        """Number of nodes in layer ``t``."""
        return self.base ** min(t, self.K)

    @property
    def full_layer_width(self) -> int:
        return self.base**self.K

    @property
    def node_count(self) -> int:
        return sum(self.layer_width(t) for t in range(self.N))

    @property
    def edge_count(self) -> int:
        return sum(self.layer_width(t) for t in range(self.N - 1)) * self.base

    @property
    def memory_estimate(self) -> int:
        return _memory_estimate(self.N, self.base, self.K)

    def window(self, t: int, index: int) -> tuple:
        """Steps (oldest first) encoded by node ``index`` of layer ``t``."""
        width = min(t, self.K)
        digits = []
        for _ in range(width):
            index, r = divmod(index, self.base)
            digits.append(r)
        return tuple(int(self.steps[r]) for r in reversed(digits))

    def node_index(self, window) -> int:
        lookup = {int(v): i for i, v in enumerate(self.steps)}
        index = 0
        for s in window:
            index = index * self.base + lookup[int(s)]
        return index

    def successors(self, t: int, index: int) -> list:
        """Nodes of layer ``t + 1`` reachable from ``index`` in layer ``t``."""
        if t >= self.N - 1:
            return []
        keep = index % (self.base ** (self.K - 1)) if t >= self.K else index
        return [keep * self.base + r for r in range(self.base)]

    def layer_coefficients(self, t: int) -> np.ndarray:
        """Lookup table ``f[d-1, m + C*K]`` of edge-weight terms into layer ``t``."""
        f = np.zeros((self.K, 2 * self.C * self.K + 1))
        for d in range(1, min(t, self.K) + 1):
            f[d - 1] = 2.0 * self.banded[t - d, t] * self.correlations[d - 1, t - d]
        return np.nan_to_num(f)

    def edge_weight(self, t: int, window) -> float:
        """Weight of every edge entering the node ``window`` of layer ``t``."""
        CK = self.C * self.K
        f = self.layer_coefficients(t)
        partial = 0
        total = 0.0
        for d, s in enumerate(reversed(tuple(window)), start=1):
            partial += s
            total += f[d - 1, CK - partial]
        return total

    def path_weight(self, path) -> float:
        """Sum of edge weights along ``path`` (without the diagonal constant)."""
        path = np.asarray(getattr(path, "entries", path), dtype=np.int64)
        steps = np.diff(path)
        total = 0.0
        for t in range(1, self.N):
            total += self.edge_weight(t, steps[max(0, t - self.K) : t])
        return total


def build_graph(D, C: int, K: int, mu: float, memory_cap: int = DEFAULT_MEMORY_CAP,
                method: str = "auto") -> KGraph:
    """Prepare the trellis for ``D``; ``K`` is clipped to ``N - 1``."""
    D = as_grid(D)
    M, N = D.shape
    C, K = int(C), int(K)
    if C < 0:
        raise ParameterError(f"Lipschitz constant must be nonnegative, got {C}")
    if K < 1:
        raise ParameterError(f"band K must be at least 1, got {K}")
    K = min(K, N - 1)
    B = 2 * C + 1
    _pack_layout(B)
    need = _memory_estimate(N, B, K)
    if need > memory_cap:
        raise ResourceError(
            f"trellis with C={C}, K={K} needs about {need / 2**30:.2f} GiB "
            f"(cap {memory_cap / 2**30:.2f} GiB); reduce K or use the "
            "multiresolution solver, which runs every level with C=1"
        )
    coupling = build_coupling(N, mu, K)
    corr = precompute_correlations(D, C, K, method)
    diag = float(np.sum(np.diag(coupling.banded) * np.sum(D * D, axis=0)))
    return KGraph((M, N), C, K, float(mu), coupling.banded, corr, diag)


@numba.njit(cache=True)
def _partial_sum_index(B, K, steps, offset):
    """``offset - (sum of steps encoded by idx)`` for every full-window index."""
    n = B**K
    out = np.empty(n, dtype=np.int32)
    for idx in range(n):
        rest = idx
        s = 0
        for _ in range(K):
            s += steps[rest % B]
            rest //= B
        out[idx] = offset - s
    return out


@numba.njit(cache=True)
def _fill_weights(G, sidx, f, width, B):
    # G[:B**width] <- edge weights of every window of `width` steps
    for i in range(B):
        G[i] = f[0, sidx[i]]
    P = B
    for d in range(2, width + 1):
        for i in range(B - 1, -1, -1):
            base = i * P
            for r in range(P):
                G[base + r] = G[r] + f[d - 1, sidx[base + r]]
        P *= B


@numba.njit(cache=True)
def _ramp_step(Vold, Vnew, G, n_old, B):
    for p in range(n_old):
        v = Vold[p]
        base = p * B
        for k in range(B):
            Vnew[base + k] = v + G[base + k]


@numba.njit(parallel=True, cache=True)
def _full_step(Vold, Vnew, G, bp, B, P, per, bits):
    nbytes = bp.shape[0]
    for q in numba.prange(nbytes):
        packed = 0
        for j in range(per):
            p = q * per + j
            if p >= P:
                break
            best = Vold[p]
            arg = 0
            for i in range(1, B):
                v = Vold[i * P + p]
                if v > best:
                    best = v
                    arg = i
            packed |= arg << (j * bits)
            base = p * B
            for k in range(B):
                Vnew[base + k] = best + G[base + k]
        bp[q] = packed


def _reversed_key(indices, width, B):
    """Integer key comparing windows by newest step first."""
    key = np.zeros_like(indices)
    rest = indices.copy()
    for pos in range(width):
        # pos 0 is the newest digit and gets the largest weight
        key += (rest % B) * B ** (width - 1 - pos)
        rest //= B
    return key


def longest_path(g: KGraph) -> tuple[ShiftPath, float]:
    """Exact maximizer of the bandlimited objective by layered DP.

    Returns the path (``path[0] == 0``) and its objective value, diagonal
    constant included.
    """
    N, B, K, C = g.N, g.base, g.K, g.C
    steps = g.steps.astype(np.int64)
    bits, per = _pack_layout(B)
    full = B**K
    P = B ** (K - 1)
    sidx = _partial_sum_index(B, K, steps, C * K)
    G = np.empty(full)
    V = np.zeros(full)
    Vnew = np.empty(full)
    n_full = max(0, N - 1 - K)
    bp = np.zeros((n_full, -(-P // per)), dtype=np.uint8)

    width = 0
    for t in range(1, N):
        f = g.layer_coefficients(t)
        new_width = min(t, K)
        _fill_weights(G, sidx, f, new_width, B)
        if new_width > width:
            _ramp_step(V, Vnew, G, B**width, B)
        else:
            _full_step(V, Vnew, G, bp[t - K - 1], B, P, per, bits)
        V, Vnew = Vnew, V
        width = new_width

    final = V[: B**width]
    best = final.max()
    ties = np.flatnonzero(final == best)
    node = int(ties[np.argmin(_reversed_key(ties, width, B))])

    digits = []
    rest = node
    for _ in range(width):
        rest, r = divmod(rest, B)
        digits.append(r)
    # digits now newest first; walk the backpointers further back
    mask = (1 << bits) - 1
    for t in range(N - 1, K, -1):
        prefix = node // B
        byte = bp[t - K - 1, prefix // per]
        oldest = (int(byte) >> ((prefix % per) * bits)) & mask
        digits.append(oldest)
        node = oldest * P + prefix
    step_seq = steps[np.array(digits[::-1], dtype=np.int64)] if digits else np.zeros(0, np.int64)
    path = np.concatenate([[0], np.cumsum(step_seq)])
    return ShiftPath(path), float(best) + g.diagonal_constant


def admissible_paths(N: int, C: int) -> tuple[np.ndarray, np.ndarray]:
    """All paths with ``path[0] == 0`` and steps in ``[-C, C]``.

    Returns the step digits (indices into :func:`step_values`) and the paths.
    """
    B = 2 * C + 1
    steps = step_values(C)
    digits = np.array(list(itertools.product(range(B), repeat=N - 1)), dtype=np.int64)
    digits = digits.reshape(-1, N - 1)
    paths = np.zeros((digits.shape[0], N), dtype=np.int64)
    paths[:, 1:] = np.cumsum(steps[digits], axis=1)
    return digits, paths


def brute_force_path(D, C: int, K: int, mu: float) -> tuple[ShiftPath, float]:
    """Enumerate every admissible path (``path[0] == 0``) and keep the best.

    Independent of the trellis: correlations are summed directly per path.
    Paths within ``1e-12`` (relative) of the maximum count as ties and are
    resolved with the trellis rule.
    """
    D = as_grid(D)
    M, N = D.shape
    K = min(int(K), N - 1)
    B = 2 * C + 1
    if B ** (N - 1) > BRUTE_FORCE_LIMIT:
        raise InstanceTooLargeError(
            f"{B ** (N - 1)} paths exceed the enumeration limit {BRUTE_FORCE_LIMIT}"
        )
    banded = build_coupling(N, mu, K).banded
    digits, paths = admissible_paths(N, C)

    values = np.full(paths.shape[0], float(np.sum(np.diag(banded) * np.sum(D * D, axis=0))))
    for j in range(N):
        for k in range(j + 1, min(N, j + K + 1)):
            rel = paths[:, j] - paths[:, k]
            shifts = np.unique(rel)
            corr = {int(m): float(D[:, j] @ np.roll(D[:, k], m)) for m in shifts}
            values += 2.0 * banded[j, k] * np.array([corr[int(m)] for m in rel])

    best = values.max()
    tol = 1e-12 * max(abs(best), float(np.sum(D * D)), 1e-300)
    ties = np.flatnonzero(values >= best - tol)
    # newest step most significant
    weights = B ** np.arange(N - 1, dtype=np.int64)
    key = digits[ties] @ weights
    pick = ties[np.argmin(key)]
    return ShiftPath(paths[pick]), float(values[pick])


def evaluate(D, path, K: int, mu: float) -> float:
    """Bandlimited objective of ``path`` (convenience wrapper)."""
    D = as_grid(D)
    K = min(int(K), D.shape[1] - 1)
    return objective(D, path, build_coupling(D.shape[1], mu, K).banded)
