"""Pareto domination, the adaptive-grid elitist archive, and 2-D hypervolume.

The archive keeps mutually non-dominated solutions, thinned by a grid of
100 steps per objective spanned by the previous generation's archive
extent. Candidates enter only into an empty cell or by dominating the
cell's occupant. The very first generation (no previous extent) admits by
pure non-domination; exact duplicates of a member are always rejected.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

GRID_STEPS = 100


def dominates(a: np.ndarray, b: np.ndarray, directions: np.ndarray) -> bool:
    """True iff `a` is not worse than `b` everywhere and strictly better somewhere."""
    oriented_a = a * directions
    oriented_b = b * directions
    return bool((oriented_a >= oriented_b).all() and (oriented_a > oriented_b).any())


@dataclass
class ArchiveEntry:
    values: np.ndarray
    genotype: object = None


@dataclass
class ElitistArchive:
    """Adaptive-grid elitist archive; insertion is linearizable via an internal lock."""

    directions: np.ndarray
    steps: int = GRID_STEPS
    members: list[ArchiveEntry] = field(default_factory=list)
    grid_lo: np.ndarray | None = None
    grid_hi: np.ndarray | None = None
    unchanged_generations: int = 0
    _changed: bool = False
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)
    _oriented: np.ndarray | None = field(default=None, repr=False)
    _cells: list = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.members)

    def values_matrix(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, len(self.directions)))
        return np.stack([m.values for m in self.members])

    def _cell(self, values: np.ndarray) -> tuple | None:
        if self.grid_lo is None:
            return None
        key = []
        for j in range(len(values)):
            span = self.grid_hi[j] - self.grid_lo[j]
            if span <= 0:
                continue  # degenerate extent: this objective does not discriminate
            c = int(np.floor((values[j] - self.grid_lo[j]) / span * self.steps))
            key.append(min(max(c, 0), self.steps - 1))
        return tuple(key) if key else None

    def _refresh_cache(self) -> None:
        self._oriented = self.values_matrix() * self.directions
        self._cells = [self._cell(m.values) for m in self.members]

    def set_grid(self, lo, hi) -> None:
        """Pin grid bounds explicitly (tests and replay tooling)."""
        with self._lock:
            self.grid_lo = None if lo is None else np.asarray(lo, dtype=float)
            self.grid_hi = None if hi is None else np.asarray(hi, dtype=float)
            self._refresh_cache()

    def try_add(self, values: np.ndarray, genotype=None) -> bool:
        """Attempt insertion; True iff the candidate was admitted."""
        values = np.asarray(values, dtype=float)
        if not np.isfinite(values).all():
            return False
        with self._lock:
            if self._oriented is None or len(self._cells) != len(self.members):
                self._refresh_cache()
            c = values * self.directions
            if self.members:
                ge = self._oriented >= c
                rows_ge = ge.all(axis=1)
                if (rows_ge & (self._oriented > c).any(axis=1)).any():
                    return False  # dominated by a member
                if (self._oriented == c).all(axis=1).any():
                    return False  # exact duplicate of a member
            cell = self._cell(values)
            if cell is not None and cell in self._cells:
                occupant = self.members[self._cells.index(cell)]
                if not dominates(values, occupant.values, self.directions):
                    return False
            if self.members:
                le_rows = (self._oriented <= c).all(axis=1) & (self._oriented < c).any(axis=1)
                if le_rows.any():
                    self.members = [m for m, drop in zip(self.members, le_rows) if not drop]
            snapshot = genotype.copy() if hasattr(genotype, "copy") else genotype
            self.members.append(ArchiveEntry(values, snapshot))
            self._refresh_cache()
            self._changed = True
            return True

    def rebuild_grid(self) -> None:
        """Generation boundary: re-span the grid from the current members.

        The new extent is the members' min/max per objective; members that
        collide in the re-spanned grid are thinned to one per cell (first
        admitted wins). The stagnation counter advances when neither
        insertions nor thinning changed the member set this generation.
        """
        with self._lock:
            changed = self._changed
            if self.members:
                vals = self.values_matrix()
                self.grid_lo = vals.min(axis=0)
                self.grid_hi = vals.max(axis=0)
                kept: list[ArchiveEntry] = []
                occupied: set = set()
                for m in self.members:
                    cell = self._cell(m.values)
                    if cell is not None and cell in occupied:
                        changed = True
                        continue
                    if cell is not None:
                        occupied.add(cell)
                    kept.append(m)
                self.members = kept
            else:
                self.grid_lo = self.grid_hi = None
            self._refresh_cache()
            self.unchanged_generations = 0 if changed else self.unchanged_generations + 1
            self._changed = False


# ---------------------------------------------------------------------------
# hypervolume


@dataclass(frozen=True)
class HypervolumeAxis:
    """Normalization of one objective to [0, 1] with its direction.

    Values map to a "gain" coordinate where 1 is best and the reference
    point sits at 0: maximize axes gain (v - lo) / (hi - lo), minimize axes
    the complement. Out-of-range values clamp to the boundary.
    """

    direction: int
    lo: float
    hi: float

    def gain(self, v: float) -> float:
        span = self.hi - self.lo
        u = 0.0 if span <= 0 else min(max((v - self.lo) / span, 0.0), 1.0)
        return u if self.direction > 0 else 1.0 - u


def r2_axis() -> HypervolumeAxis:
    return HypervolumeAxis(1, 0.0, 1.0)


def size_axis(size_max: float) -> HypervolumeAxis:
    return HypervolumeAxis(-1, 0.0, float(size_max))


def hypervolume_2d(points, axes: tuple[HypervolumeAxis, HypervolumeAxis]) -> float:
    """Area dominated by a 2-objective front relative to the reference point."""
    if len(axes) != 2:
        raise ValueError("hypervolume_2d handles exactly two objectives")
    gains = [(axes[0].gain(p[0]), axes[1].gain(p[1])) for p in points]
    gains = [g for g in gains if g[0] > 0 and g[1] > 0]
    if not gains:
        return 0.0
    # keep the non-dominated staircase: by descending first gain, a point
    # survives only if it improves the best second gain seen so far
    gains.sort(key=lambda g: (-g[0], -g[1]))
    front = []
    best_g1 = 0.0
    for g0, g1 in gains:
        if g1 > best_g1:
            front.append((g0, g1))
            best_g1 = g1
    area = 0.0
    prev_g0 = 0.0
    for g0, g1 in sorted(front):
        area += (g0 - prev_g0) * g1
        prev_g0 = g0
    return area
