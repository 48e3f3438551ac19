"""Box domains and tensor grids over them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

MAX_GRID_POINTS = 10_000_000


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    anchor: tuple[float, ...] | None = None

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or not lo:
            raise ValueError("box bounds must be non-empty and of equal length")
        if any(h < l for l, h in zip(lo, hi)):
            raise ValueError("box needs lo <= hi on every axis")
        anchor = self.anchor
        anchor = tuple((l + h) / 2 for l, h in zip(lo, hi)) if anchor is None else tuple(
            float(v) for v in np.atleast_1d(anchor))
        if len(anchor) != len(lo):
            raise ValueError("anchor dimension does not match the box")
        if any(not (l <= a <= h) for l, a, h in zip(lo, anchor, hi)):
            raise ValueError("anchor must lie in the box")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "anchor", anchor)

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.extent))

    @property
    def radius(self) -> float:
        """r_X(x0): largest distance from the anchor to a point of the box."""
        x0 = np.array(self.anchor)
        far = np.maximum(np.abs(np.array(self.lo) - x0), np.abs(np.array(self.hi) - x0))
        return float(np.linalg.norm(far))

    @property
    def is_point(self) -> bool:
        return bool(np.all(self.extent == 0))


@dataclass(frozen=True)
class GridSpec:
    box: Box
    resolution: tuple[int, ...]

    def __post_init__(self):
        res = tuple(int(r) for r in np.broadcast_to(np.atleast_1d(self.resolution), (self.box.n,)))
        if any(r < 2 for r in res):
            raise ValueError("grid resolution must be at least 2 per axis")
        if any(h <= l for l, h in zip(self.box.lo, self.box.hi)):
            raise ValueError("grid needs lo < hi on every axis")
        if math.prod(res) > MAX_GRID_POINTS:
            raise ValueError(f"grid of {math.prod(res)} points exceeds cap {MAX_GRID_POINTS}")
        object.__setattr__(self, "resolution", res)

    @classmethod
    def uniform(cls, box: Box, per_axis: int) -> "GridSpec":
        return cls(box, (per_axis,) * box.n)

    @property
    def total(self) -> int:
        return math.prod(self.resolution)

    @property
    def spacing(self) -> np.ndarray:
        return self.box.extent / (np.array(self.resolution) - 1)

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, r) for l, h, r in zip(self.box.lo, self.box.hi, self.resolution)]

    def points(self) -> np.ndarray:
        """All grid points, shape (total, n), C order (last axis fastest)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def chunks(self, size: int = 250_000):
        """Yield point blocks of at most ``size`` rows, in the order of points()."""
        axes = self.axes()
        if self.total <= size:
            yield self.points()
            return
        # split along the leading axis
        inner = math.prod(self.resolution[1:])
        step = max(1, size // inner)
        for start in range(0, self.resolution[0], step):
            sub = [axes[0][start:start + step]] + axes[1:]
            mesh = np.meshgrid(*sub, indexing="ij")
            yield np.stack([m.reshape(-1) for m in mesh], axis=1)

    def refined(self) -> "GridSpec":
        """Double the number of intervals on every axis (old nodes are kept)."""
        return GridSpec(self.box, tuple(2 * r - 1 for r in self.resolution))


def evaluate_on_grid(fn, grid: GridSpec) -> np.ndarray:
    """Values of fn on the grid as an array of shape resolution + (m,)."""
    parts = [_as_columns(fn(pts), len(pts)) for pts in grid.chunks()]
    vals = np.concatenate(parts, axis=0)
    return vals.reshape(grid.resolution + (vals.shape[1],))


def _as_columns(v, count: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v.reshape(count, -1) if v.size != count else v.reshape(count, 1)
    return v


def offsets_by_norm(spacing: np.ndarray, max_norm: float, min_norm: float = -1.0):
    """Integer offsets o (half-space, o != 0) with min_norm < ||o * spacing|| <= max_norm, sorted."""
    n = len(spacing)
    reach = [int(math.floor(max_norm / h + 1e-12)) for h in spacing]
    out = []
    for o in itertools.product(*[range(-r, r + 1) for r in reach]):
        # keep one of each +-o pair: first non-zero entry positive
        nz = next((v for v in o if v != 0), 0)
        if nz <= 0:
            continue
        norm = float(np.linalg.norm(np.array(o) * spacing))
        if min_norm < norm <= max_norm * (1 + 1e-12):
            out.append((norm, o))
    out.sort()
    return out
