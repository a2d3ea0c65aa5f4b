"""Grid rough paths: signature lifts, Hoelder metrics, dyadic bounds, translation.

A grid rough path stores the running signature (prefix products) of its steps,
so the group increment between any two grid indices i, j is the closed form

    level1 = B[j] - B[i]
    level2 = C[j] - C[i] - B[i] (x) (B[j] - B[i])

which is Chen-consistent by construction.  Batch variants of the hot operations
(lifting, increment extraction, homogeneous norms over dyadic pair families)
work on stacked arrays and carry the Monte-Carlo layers; the object API stays
convenient for single paths.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .algebra import (
    G2Element,
    batch_homogeneous_norm,
)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("times must be a vector with at least two entries")
    if not np.all(np.isfinite(times)):
        raise ValueError("times contain non-finite entries")
    if not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    return times


@dataclass(frozen=True)
class CMPath:
    """Absolutely continuous drift path sampled on a grid: times (N+1,), values (N+1, d)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _check_times(self.times)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != times.shape[0]:
            raise ValueError(
                f"values rows ({values.shape[0]}) must match times ({times.shape[0]})"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("values contain non-finite entries")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    def to_dict(self) -> dict:
        return {
            "times": [float(t) for t in self.times],
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CMPath":
        return cls(np.asarray(d["times"], dtype=float), np.asarray(d["values"], dtype=float))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "CMPath":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class GridRoughPath:
    """Step-2 rough path on a time grid, stored as prefix signatures."""

    def __init__(self, times, prefix_level1, prefix_level2):
        self.times = _check_times(times)
        B = np.asarray(prefix_level1, dtype=float)
        C = np.asarray(prefix_level2, dtype=float)
        n = self.times.shape[0]
        if B.ndim != 2 or B.shape[0] != n:
            raise ValueError(f"prefix_level1 must have shape ({n}, d)")
        d = B.shape[1]
        if C.shape != (n, d, d):
            raise ValueError(f"prefix_level2 must have shape ({n}, {d}, {d})")
        if not (np.all(np.isfinite(B)) and np.all(np.isfinite(C))):
            raise ValueError("prefix arrays contain non-finite entries")
        if np.any(B[0] != 0.0) or np.any(C[0] != 0.0):
            raise ValueError("prefix arrays must start at the unit element")
        self.prefix_level1 = B
        self.prefix_level2 = C

    @property
    def dim(self) -> int:
        return self.prefix_level1.shape[1]

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    @property
    def duration(self) -> float:
        return float(self.times[-1] - self.times[0])

    @classmethod
    def from_steps(cls, times, steps) -> "GridRoughPath":
        """Build from per-step group elements (list of G2Element, or (b, c) arrays)."""
        times = _check_times(times)
        n = times.shape[0] - 1
        if isinstance(steps, tuple):
            b_steps, c_steps = steps
            b_steps = np.asarray(b_steps, dtype=float)
            c_steps = np.asarray(c_steps, dtype=float)
        else:
            if len(steps) != n:
                raise ValueError(f"expected {n} steps, got {len(steps)}")
            b_steps = np.stack([s.level1 for s in steps])
            c_steps = np.stack([s.level2 for s in steps])
        if b_steps.shape[0] != n or c_steps.shape[0] != n:
            raise ValueError(f"expected {n} steps, got {b_steps.shape[0]}")
        d = b_steps.shape[1]
        B = np.zeros((n + 1, d))
        C = np.zeros((n + 1, d, d))
        np.cumsum(b_steps, axis=0, out=B[1:])
        # Chen chaining: each step contributes its own level 2 plus the cross
        # term of the running level 1 with the step's level 1.
        cross = B[:-1, :, None] * b_steps[:, None, :]
        np.cumsum(c_steps + cross, axis=0, out=C[1:])
        return cls(times, B, C)

    def step_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-step group elements as arrays: (N, d) level 1 and (N, d, d) level 2."""
        b = np.diff(self.prefix_level1, axis=0)
        c = (
            np.diff(self.prefix_level2, axis=0)
            - self.prefix_level1[:-1, :, None] * b[:, None, :]
        )
        return b, c

    def increment(self, i: int, j: int) -> G2Element:
        """Group increment between grid indices i and j."""
        n = self.times.shape[0]
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"indices ({i}, {j}) outside grid of {n} points")
        b = self.prefix_level1[j] - self.prefix_level1[i]
        c = (
            self.prefix_level2[j]
            - self.prefix_level2[i]
            - np.outer(self.prefix_level1[i], b)
        )
        return G2Element(b, c)

    def to_dict(self) -> dict:
        b, c = self.step_arrays()
        d = self.dim
        steps = [
            [float(d)] + [float(v) for v in b[k]] + [float(v) for v in c[k].ravel()]
            for k in range(b.shape[0])
        ]
        return {"times": [float(t) for t in self.times], "steps": steps}

    @classmethod
    def from_dict(cls, payload: dict) -> "GridRoughPath":
        times = np.asarray(payload["times"], dtype=float)
        steps = [G2Element.from_flat(row) for row in payload["steps"]]
        return cls.from_steps(times, steps)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "GridRoughPath":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Lifts
# ---------------------------------------------------------------------------


def batch_prefix(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Prefix signatures of piecewise-linear paths, batched.

    values has shape (S, N+1, d); returns level-1 prefixes (S, N+1, d) and
    level-2 prefixes (S, N+1, d, d).  Each linear step contributes
    (delta, 0.5 * delta (x) delta) and steps chain by the group product.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 3:
        raise ValueError("values must have shape (S, N+1, d)")
    delta = np.diff(values, axis=1)
    S, N, d = delta.shape
    B = np.zeros((S, N + 1, d))
    np.cumsum(delta, axis=1, out=B[:, 1:])
    term = (B[:, :-1, :, None] + 0.5 * delta[:, :, :, None]) * delta[:, :, None, :]
    C = np.zeros((S, N + 1, d, d))
    np.cumsum(term, axis=1, out=C[:, 1:])
    return B, C


def lift_piecewise_linear(path: CMPath) -> GridRoughPath:
    """Canonical step-2 signature lift of a piecewise-linear grid path.

    The level-2 part of each step is half the squared increment, so the lift is
    weakly geometric and invariant under grid refinement of the same polygon.
    """
    B, C = batch_prefix(path.values[None])
    return GridRoughPath(path.times, B[0], C[0])


def trivial_rough_path(times, dim: int) -> GridRoughPath:
    """Lift of the constant path: every increment is the group unit."""
    times = _check_times(times)
    n = times.shape[0]
    return GridRoughPath(times, np.zeros((n, dim)), np.zeros((n, dim, dim)))


def increment(x: GridRoughPath, i: int, j: int) -> G2Element:
    """Module-level alias for GridRoughPath.increment."""
    return x.increment(i, j)


# ---------------------------------------------------------------------------
# Pair families and batched increment extraction
# ---------------------------------------------------------------------------


def all_pair_indices(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """All grid pairs i < j."""
    i_idx, j_idx = np.triu_indices(n_points, k=1)
    return i_idx.astype(np.intp), j_idx.astype(np.intp)


def dyadic_pair_indices(n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Adjacent dyadic pairs (m 2^{-l} T, (m+1) 2^{-l} T) for every level l >= 0.

    Requires a dyadic grid (n_points = 2^L + 1).
    """
    n_steps = n_points - 1
    if n_steps < 1 or (n_steps & (n_steps - 1)) != 0:
        raise ValueError(f"dyadic pair family needs 2^L steps, got {n_steps}")
    L = n_steps.bit_length() - 1
    i_list, j_list = [], []
    for level in range(L + 1):
        stride = n_steps >> level
        starts = np.arange(0, n_steps, stride, dtype=np.intp)
        i_list.append(starts)
        j_list.append(starts + stride)
    return np.concatenate(i_list), np.concatenate(j_list)


def pair_increments(
    B: np.ndarray, C: np.ndarray, i_idx: np.ndarray, j_idx: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Group increments for index pairs, from prefix arrays.

    B has shape (..., N+1, d) and C (..., N+1, d, d); index arrays have shape
    (K,).  Returns level 1 (..., K, d) and level 2 (..., K, d, d).
    """
    Bi = B[..., i_idx, :]
    b = B[..., j_idx, :] - Bi
    c = C[..., j_idx, :, :] - C[..., i_idx, :, :] - Bi[..., :, None] * b[..., None, :]
    return b, c


def difference_increments(bx, cx, by, cy) -> tuple[np.ndarray, np.ndarray]:
    """Increments of the group difference x^{-1} * y from per-pair increments."""
    b = by - bx
    c = cy - cx - bx[..., :, None] * b[..., None, :]
    return b, c


def _pair_chunks(i_idx, j_idx, dim, budget=2_000_000):
    """Split a pair family so each chunk keeps level-2 temporaries below budget floats."""
    k = i_idx.shape[0]
    chunk = max(1, budget // max(dim * dim, 1))
    for start in range(0, k, chunk):
        sl = slice(start, min(start + chunk, k))
        yield i_idx[sl], j_idx[sl]


# ---------------------------------------------------------------------------
# Geometric defect and Chen audit
# ---------------------------------------------------------------------------


def geometric_defect(x: GridRoughPath) -> float:
    """Max over grid pairs of the sup-norm gap between Sym(level2) and half the
    squared level-1 increment.  Zero (to rounding) exactly for weakly geometric
    paths; a corrupted step shows up in every pair that spans it."""
    B, C = x.prefix_level1, x.prefix_level2
    i_all, j_all = all_pair_indices(x.times.shape[0])
    worst = 0.0
    for i_idx, j_idx in _pair_chunks(i_all, j_all, x.dim):
        b, c = pair_increments(B, C, i_idx, j_idx)
        gap = 0.5 * (c + np.swapaxes(c, -1, -2)) - 0.5 * b[..., :, None] * b[..., None, :]
        worst = max(worst, float(np.abs(gap).max()))
    return worst


def chen_defect(x: GridRoughPath, n_triples: int = 200, seed: int = 0) -> float:
    """Max violation of increment(i,j) = increment(i,k) * increment(k,j) over
    random index triples i < k < j.  Diagnostic; zero to rounding by construction."""
    rng = np.random.default_rng(seed)
    n = x.times.shape[0]
    if n < 3:
        return 0.0
    worst = 0.0
    for _ in range(n_triples):
        i, k, j = np.sort(rng.choice(n, size=3, replace=False))
        if i == k or k == j:
            continue
        left = x.increment(i, j)
        a = x.increment(i, k)
        b = x.increment(k, j)
        lvl1 = a.level1 + b.level1
        lvl2 = a.level2 + b.level2 + np.outer(a.level1, b.level1)
        worst = max(
            worst,
            float(np.abs(left.level1 - lvl1).max()),
            float(np.abs(left.level2 - lvl2).max()),
        )
    return worst


# ---------------------------------------------------------------------------
# Hoelder metrics
# ---------------------------------------------------------------------------


def _resolve_pairs(x: GridRoughPath, pair_set) -> tuple[np.ndarray, np.ndarray]:
    n = x.times.shape[0]
    if pair_set == "all":
        return all_pair_indices(n)
    if pair_set == "dyadic":
        return dyadic_pair_indices(n)
    raise ValueError(f"unknown pair_set {pair_set!r}, expected 'all' or 'dyadic'")


def _check_same_grid(x: GridRoughPath, y: GridRoughPath):
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.times.shape != y.times.shape or not np.array_equal(x.times, y.times):
        raise ValueError("paths must share the same time grid")


def holder_distance(
    x: GridRoughPath,
    y: GridRoughPath,
    alpha: float,
    pair_set: str = "all",
    variant: str | None = None,
) -> float:
    """Hoelder distance: sup over grid pairs of the homogeneous norm of the
    increment difference x_{s,t}^{-1} * y_{s,t}, weighted by |t-s|^{-alpha}.

    pair_set 'all' uses every grid pair (exact on the grid); 'dyadic' restricts
    to adjacent dyadic pairs at every level, a cheap lower bound.
    """
    _check_same_grid(x, y)
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    i_all, j_all = _resolve_pairs(x, pair_set)
    times = x.times
    worst = 0.0
    for i_idx, j_idx in _pair_chunks(i_all, j_all, x.dim):
        bx, cx = pair_increments(x.prefix_level1, x.prefix_level2, i_idx, j_idx)
        by, cy = pair_increments(y.prefix_level1, y.prefix_level2, i_idx, j_idx)
        b, c = difference_increments(bx, cx, by, cy)
        norms = batch_homogeneous_norm(b, c, variant)
        weights = (times[j_idx] - times[i_idx]) ** alpha
        worst = max(worst, float((norms / weights).max()))
    return worst


def holder_norm(
    x: GridRoughPath,
    alpha: float,
    pair_set: str = "all",
    variant: str | None = None,
) -> float:
    """Hoelder norm of x: distance to the lift of the constant path."""
    return holder_distance(
        x, trivial_rough_path(x.times, x.dim), alpha, pair_set=pair_set, variant=variant
    )


# ---------------------------------------------------------------------------
# Dyadic discretisation bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DyadicBoundResult:
    """Right-hand side of the dyadic Hoelder majorant, with audit metadata."""

    value: float
    coarse_term: float
    fine_term: float
    alpha: float
    eps: float
    grid_depth: int
    truncation: str = "grid-resolution"


def _uniform_level_norms(x: GridRoughPath, variant) -> list[np.ndarray]:
    """Homogeneous norms of all uniform dyadic intervals, per level 0..L."""
    n_steps = x.n_steps
    L = n_steps.bit_length() - 1
    out = []
    for level in range(L + 1):
        stride = n_steps >> level
        starts = np.arange(0, n_steps, stride, dtype=np.intp)
        b, c = pair_increments(x.prefix_level1, x.prefix_level2, starts, starts + stride)
        out.append(batch_homogeneous_norm(b, c, variant))
    return out


def dyadic_holder_bound(
    x: GridRoughPath,
    alpha: float,
    eps: float,
    variant: str | None = None,
) -> DyadicBoundResult:
    """Hoelder-norm majorant from dyadic increments only.

    The majorant is the max of a coarse term (2 x the sum over levels of the
    worst uniform dyadic increment norm, scaled by eps^-alpha) and a fine term
    (3 x the worst windowed level sum over short offsets, scaled by
    (eps 2^{-j-1})^-alpha).  Level sums run to the grid depth; increments below
    grid resolution are unrepresentable, which the result flags as the
    truncation mode.

    Requires a uniform grid of 2^L steps starting at 0, and eps = T 2^{-e}
    with 1 <= e < L so every window endpoint is a grid point.
    """
    n_steps = x.n_steps
    if n_steps < 2 or (n_steps & (n_steps - 1)) != 0:
        raise ValueError(f"needs 2^L steps, got {n_steps}")
    times = x.times
    T = times[-1] - times[0]
    dt = np.diff(times)
    if not np.allclose(dt, dt[0], rtol=0.0, atol=1e-12 * T):
        raise ValueError("needs a uniform grid")
    L = n_steps.bit_length() - 1
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    ratio = T / eps
    e = int(round(np.log2(ratio)))
    if e < 1 or e >= L or abs(ratio - 2.0**e) > 1e-9 * ratio:
        raise ValueError(
            f"eps must equal T * 2^-e with 1 <= e < grid depth {L}; got eps={eps}"
        )

    level_norms = _uniform_level_norms(x, variant)
    level_sups = np.array([ln.max() for ln in level_norms])

    # Coarse term: dyadic expansion of increments from the origin.
    coarse = 2.0 * level_sups[1:].sum() / eps**alpha

    # Fine term: windows of width eps 2^{-j} starting at multiples of the width,
    # each decomposed over levels j+1 .. L-e of width eps 2^{-l}.
    fine = 0.0
    for j in range(0, L - e):
        i_max = (2**j) * (2**e - 1)
        window_sums = np.zeros(i_max + 1)
        for level in range(j + 1, L - e + 1):
            norms = level_norms[e + level]
            w = 2 ** (level - j)
            needed = (i_max + 1) * w
            windowed = norms[:needed].reshape(-1, w).max(axis=1)
            window_sums += windowed
        denom = eps**alpha * 2.0 ** (-alpha * (j + 1))
        fine = max(fine, 3.0 * float(window_sums.max()) / denom)

    return DyadicBoundResult(
        value=float(max(coarse, fine)),
        coarse_term=float(coarse),
        fine_term=float(fine),
        alpha=float(alpha),
        eps=float(eps),
        grid_depth=L,
    )


# ---------------------------------------------------------------------------
# Translation by an absolutely continuous path
# ---------------------------------------------------------------------------


def translate(x: GridRoughPath, h: CMPath) -> GridRoughPath:
    """Translate a rough path by a drift path sampled on the same grid.

    Per step, level 1 gains the drift increment and level 2 gains the three
    cross/self integrals of the linear interpolants, each of which reduces to
    half an outer product of the step increments.  The construction chains by
    the group product, commutes for successive drifts (T^g T^h = T^{g+h}) and
    preserves the weakly geometric relation exactly.
    """
    if h.times.shape != x.times.shape or not np.array_equal(h.times, x.times):
        raise ValueError("drift path must be sampled on the rough path's grid")
    if h.dim != x.dim:
        raise ValueError(f"dimension mismatch: path {x.dim}, drift {h.dim}")
    b, c = x.step_arrays()
    dh = np.diff(h.values, axis=0)
    cross = b[:, :, None] * dh[:, None, :]
    new_b = b + dh
    new_c = (
        c
        + 0.5 * (cross + np.swapaxes(cross, -1, -2))
        + 0.5 * dh[:, :, None] * dh[:, None, :]
    )
    return GridRoughPath.from_steps(x.times, (new_b, new_c))


# ---------------------------------------------------------------------------
# Mixed variation functional for drift paths
# ---------------------------------------------------------------------------


def q_variation(values: np.ndarray, q: float) -> float:
    """q-variation of a discrete path over its own grid, by dynamic programming.

    Maximizes sum |increment|_2^q over all sub-partitions; the inner maximum is
    a standard O(n^2) recursion.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if q < 1.0:
        raise ValueError(f"q must be >= 1, got {q}")
    n = values.shape[0]
    if n < 2:
        return 0.0
    dist = np.linalg.norm(values[None, :, :] - values[:, None, :], axis=-1) ** q
    best = np.zeros(n)
    for j in range(1, n):
        best[j] = np.max(best[:j] + dist[:j, j])
    return float(best[-1] ** (1.0 / q))


def q_variation_holder(h: CMPath, q: float, alpha: float) -> float:
    """Mixed q-variation Hoelder functional: sup over grid windows [s, t] of the
    q-variation of h on the window divided by |t-s|^alpha.

    O(n^3) in the grid size; intended for the modest grids where drift
    regularity needs auditing, not for Monte-Carlo loops.
    """
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if q < 1.0:
        raise ValueError(f"q must be >= 1, got {q}")
    values, times = h.values, h.times
    n = values.shape[0]
    dist = np.linalg.norm(values[None, :, :] - values[:, None, :], axis=-1) ** q
    worst = 0.0
    for s in range(n - 1):
        best = np.zeros(n - s)
        for j in range(1, n - s):
            best[j] = np.max(best[:j] + dist[s : s + j, s + j])
            val = best[j] ** (1.0 / q) / (times[s + j] - times[s]) ** alpha
            if val > worst:
                worst = val
    return float(worst)
