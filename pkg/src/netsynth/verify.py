"""Uniform-error certification on grids and empirical trial studies.

"Certified" here means: the sup of |f - g| over a tensor grid plus a slack of
L * r, where L is a finite-difference Lipschitz estimate of f - g (times a
safety factor) and r is the largest distance from a box point to its nearest
grid node. It is an estimate, not a proof.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import build_vandermonde, is_nonsingular
from .grids import Box, GridSpec, MAX_GRID_POINTS, evaluate_on_grid
from .monomials import enumerate_basis

LIPSCHITZ_SAFETY = 2.0
MIN_POINTS_PER_AXIS = 33


def sup_error(f, g, grid: GridSpec) -> float:
    """max over grid points and output coordinates of |f - g|."""
    worst = 0.0
    for pts in grid.chunks():
        try:
            a = _cols(f(pts), len(pts))
            b = _cols(g(pts), len(pts))
        except Exception as exc:  # report where it happened
            raise RuntimeError(f"evaluation failed on grid block starting at {pts[0].tolist()}: {exc}") from exc
        diff = np.abs(a - b)
        if not np.all(np.isfinite(diff)):
            bad = pts[np.flatnonzero(~np.all(np.isfinite(diff), axis=1))[0]]
            raise FloatingPointError(f"non-finite value at {bad.tolist()}")
        worst = max(worst, float(diff.max()))
    return worst


def _cols(v, count):
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v.reshape(count, -1)
    return v


@dataclass(frozen=True)
class Certificate:
    grid_error: np.ndarray  # per output coordinate
    slack: np.ndarray
    lipschitz: np.ndarray
    resolution: tuple[int, ...]

    @property
    def certified_error(self) -> np.ndarray:
        return self.grid_error + self.slack

    @property
    def worst(self) -> float:
        return float(np.max(self.certified_error))

    def passes(self, eps: float) -> bool:
        return bool(np.all(self.certified_error < eps))


def _lipschitz(err_vals: np.ndarray, spacing: np.ndarray) -> np.ndarray:
    """Per-output 2-norm of per-axis max finite-difference slopes."""
    n = len(spacing)
    slopes = np.zeros((n, err_vals.shape[-1]))
    for ax in range(n):
        if err_vals.shape[ax] > 1:
            d = np.abs(np.diff(err_vals, axis=ax)) / spacing[ax]
            slopes[ax] = d.reshape(-1, d.shape[-1]).max(axis=0)
    return np.sqrt((slopes ** 2).sum(axis=0))


def choose_resolution(box: Box, lipschitz: float, eps: float) -> tuple[int, ...]:
    """Per-axis counts with slack L * ||h/2|| <= eps/6, floor 33, total capped."""
    n = box.n
    if lipschitz <= 0:
        return (MIN_POINTS_PER_AXIS,) * n
    h = (eps / 6.0) * 2.0 / (lipschitz * math.sqrt(n))
    res = [max(MIN_POINTS_PER_AXIS, int(math.ceil(ext / h)) + 1) for ext in box.extent]
    while math.prod(res) > MAX_GRID_POINTS:
        res = [max(MIN_POINTS_PER_AXIS, int(r * 0.9)) for r in res]
    return tuple(res)


def certify(f, g, box: Box, eps: float, resolution=None, pilot: int = MIN_POINTS_PER_AXIS) -> Certificate:
    """Certify sup|f - g| over the box; resolution chosen from a pilot Lipschitz estimate unless given."""
    if box.is_point:
        x = np.array([box.anchor])
        e = np.abs(_cols(f(x), 1) - _cols(g(x), 1))[0]
        z = np.zeros_like(e)
        return Certificate(e, z, z, (1,) * box.n)

    def err(pts):
        return _cols(f(pts), len(pts)) - _cols(g(pts), len(pts))

    if resolution is None:
        pgrid = GridSpec(box, (pilot,) * box.n)
        L0 = LIPSCHITZ_SAFETY * _lipschitz(evaluate_on_grid(err, pgrid), pgrid.spacing)
        resolution = choose_resolution(box, float(L0.max()), eps)
    else:
        L0 = None
    grid = GridSpec(box, resolution)
    vals = evaluate_on_grid(err, grid)
    L = LIPSCHITZ_SAFETY * _lipschitz(vals, grid.spacing)
    if L0 is not None:
        L = np.maximum(L, L0)
    radius = float(np.linalg.norm(grid.spacing / 2))
    gerr = np.abs(vals).reshape(-1, vals.shape[-1]).max(axis=0)
    return Certificate(gerr, L * radius, L, grid.resolution)


# ------------------------------------------------------------------------- trial studies

@dataclass
class TrialSummary:
    trials: int = 0
    successes: int = 0
    seeds: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    singular: int = 0
    units: list = field(default_factory=list)

    @property
    def fraction(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    def merge(self, other: "TrialSummary") -> "TrialSummary":
        return TrialSummary(self.trials + other.trials, self.successes + other.successes,
                            self.seeds + other.seeds, self.errors + other.errors,
                            self.singular + other.singular, self.units + other.units)


def density_trial(n: int, d: int, draws: int, seed: int, sampler=None,
                  tol: float = 1e-10) -> TrialSummary:
    """Fraction of random weight sets whose non-bias Vandermonde is nonsingular.

    ``sampler(rng, N, n)`` returns an (N, n) array; default is standard normal.
    """
    if draws < 1:
        raise ValueError("draws must be at least 1")
    basis = enumerate_basis(n, d)
    N = len(basis)
    rng = np.random.default_rng(seed)
    out = TrialSummary(seeds=[seed])
    for _ in range(draws):
        W = rng.standard_normal((N, n)) if sampler is None else sampler(rng, N, n)
        chk = is_nonsingular(build_vandermonde(W, basis), tol)
        out.trials += 1
        out.errors.append(chk.margin)
        if chk.nonsingular:
            out.successes += 1
        else:
            out.singular += 1
    return out


def random_feature_study(template, seeds) -> TrialSummary:
    """Run the frozen-direction pipeline once per seed; failures are recorded, not raised."""
    from .constructor import SingularDirectionsError, construct_random_features

    seeds = list(seeds)
    if len(seeds) < 30:
        raise ValueError("a random-feature study needs at least 30 seeds")
    out = TrialSummary()
    for s in seeds:
        req = template.with_seed(s)
        out.trials += 1
        out.seeds.append(s)
        try:
            rep = construct_random_features(req)
        except SingularDirectionsError:
            out.singular += 1
            out.errors.append(math.inf)
            out.units.append(0)
            continue
        out.errors.append(float(np.max(rep.certified_error)))
        out.units.append(rep.weights.N)
        if rep.success:
            out.successes += 1
    return out


TRIAL_COLUMNS = ("seed", "certified_error", "units", "success")


def write_trials_csv(summary: TrialSummary, path, eps: float | None = None, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(TRIAL_COLUMNS)
        for s, e, u in zip(summary.seeds, summary.errors, summary.units):
            ok = (e < eps) if eps is not None else ""
            w.writerow([s, repr(float(e)), u, ok])
