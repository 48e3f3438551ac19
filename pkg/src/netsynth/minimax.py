"""Best uniform polynomial approximation on intervals, moduli of continuity, d_eps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from numpy.polynomial import polynomial as P
from scipy.optimize import minimize_scalar

from .activations import ActivationSpec
from .grids import Box, GridSpec, MAX_GRID_POINTS, evaluate_on_grid, offsets_by_norm
from .intervals import Interval, ScaleSchedule

MAX_ITER = 100
STAGNATION_TOL = 1e-10
REFINE_TOL = 1e-6
ROUNDOFF_ULPS = 64  # levels closer than this many ulps of max|sigma| are indistinguishable
MAX_REFINEMENTS = 6
MODULUS_REFINE = 32  # target grid spacing delta/32 ...
MODULUS_BUDGET = 1_100_000  # ... unless that needs more points than this


class ConvergenceError(RuntimeError):
    pass


class DegreeCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class MinimaxResult:
    interval: Interval
    d: int
    cheb_coeffs: np.ndarray = field(repr=False)  # Chebyshev series in t = (y - mid) / half
    error: float
    alternation_points: np.ndarray
    sign: int
    grid_size: int
    iterations: int

    def __call__(self, y):
        return C.chebval(self._to_t(np.asarray(y, dtype=float)), self.cheb_coeffs)

    def _to_t(self, y):
        return (y - self.interval.mid) / (0.5 * self.interval.length)

    @property
    def approximant(self) -> np.ndarray:
        """Power-basis coefficients of the approximant in y (lowest degree first)."""
        return self.shifted_coeffs(0.0)

    def shifted_coeffs(self, about: float) -> np.ndarray:
        """Coefficients c'_r of u -> p(u + about), length d+1."""
        Y = self.interval
        series = C.Chebyshev(self.cheb_coeffs, domain=[Y.lo - about, Y.hi - about])
        coef = series.convert(kind=P.Polynomial, domain=[-1, 1], window=[-1, 1]).coef
        out = np.zeros(self.d + 1)
        out[: len(coef)] = coef[: self.d + 1]
        return out

    def residuals(self, sigma: ActivationSpec) -> np.ndarray:
        a = self.alternation_points
        return sigma(a) - self(a)


def _cheb_grid(m: int) -> np.ndarray:
    return np.sort(np.cos(np.pi * np.arange(m) / (m - 1)))


def _level(f_ref: np.ndarray, t_ref: np.ndarray, d: int):
    k = len(t_ref)
    A = np.empty((k, k))
    A[:, : d + 1] = C.chebvander(t_ref, d)
    A[:, d + 1] = (-1.0) ** np.arange(k)
    sol = np.linalg.solve(A, f_ref)
    return sol[: d + 1], sol[d + 1]


def _exchange(t: np.ndarray, e: np.ndarray, count: int) -> np.ndarray:
    """Pick ``count`` alternating extrema of e, keeping the global maximum."""
    s = np.where(e >= 0, 1, -1)
    breaks = np.flatnonzero(np.diff(s)) + 1
    idx = [seg[np.argmax(np.abs(e[seg]))] for seg in np.split(np.arange(len(t)), breaks)]
    while len(idx) > count:
        mags = np.abs(e[idx])
        if len(idx) - count == 1:
            idx.pop(0 if mags[0] < mags[-1] else -1)
            continue
        j = int(np.argmin(mags))
        if j == 0 or j == len(idx) - 1:
            idx.pop(j)
        else:
            drop = j - 1 if mags[j - 1] < mags[j + 1] else j + 1
            for r in sorted((j, drop), reverse=True):
                idx.pop(r)
    return np.array(idx)


def _polish(err, t_ref: np.ndarray) -> np.ndarray:
    """Local continuous maximisers of |err| around each reference point."""
    out = []
    k = len(t_ref)
    for i, ti in enumerate(t_ref):
        a = -1.0 if i == 0 else 0.5 * (t_ref[i - 1] + ti)
        b = 1.0 if i == k - 1 else 0.5 * (ti + t_ref[i + 1])
        s = 1.0 if err(np.array([ti]))[0] >= 0 else -1.0
        cands = [ti, a, b]
        if b > a:
            r = minimize_scalar(lambda t: -s * err(np.array([t]))[0], bounds=(a, b),
                                method="bounded", options={"xatol": 1e-14 * max(1.0, abs(b - a))})
            cands.append(float(r.x))
        vals = s * err(np.array(cands))
        out.append(cands[int(np.argmax(vals))])
    return np.array(out)


def best_approximant(sigma: ActivationSpec, Y: Interval, d: int, grid_size: int = 512,
                     max_iter: int = MAX_ITER) -> MinimaxResult:
    """Degree-d minimax approximant of sigma on Y by discrete exchange plus a polish step.

    The discrete solution on grid_size Chebyshev nodes is refined (grid doubled)
    until the sup error over a 4x finer grid, augmented with local maximisers,
    exceeds the levelled error by less than REFINE_TOL relative.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    if grid_size < 10 * (d + 2):
        raise ValueError(f"grid_size must be at least {10 * (d + 2)}")
    if not isinstance(Y, Interval):
        Y = Interval(*Y)
    mid, half = Y.mid, 0.5 * Y.length

    def f(t):
        return sigma(mid + half * t)

    def err_for(c):
        return lambda t: f(t) - C.chebval(t, c)

    t_ref = np.sort(np.cos(np.pi * np.arange(d + 2) / (d + 1)))
    # a slight asymmetry avoids h = 0 for odd/even sigma on symmetric intervals
    t_ref = t_ref + 1e-3 * (1 - t_ref ** 2)
    m = grid_size
    total_iter = 0
    for _ in range(MAX_REFINEMENTS + 1):
        t = _cheb_grid(m)
        ft = f(t)
        scale = max(float(np.max(np.abs(ft))), 1e-300)
        noise = ROUNDOFF_ULPS * np.finfo(float).eps * scale
        c, h = _level(f(t_ref), t_ref, d)
        prev = None
        for it in range(max_iter):
            total_iter += 1
            e = ft - C.chebval(t, c)
            emax = float(np.max(np.abs(e)))
            if emax <= 1e-13 * scale:
                return _exact(Y, d, c, emax, t_ref, m, total_iter, mid, half)
            if emax - abs(h) <= max(STAGNATION_TOL * emax, noise) or (
                    prev is not None and abs(abs(h) - prev) <= max(STAGNATION_TOL * abs(h), noise)
                    and emax - abs(h) <= max(1e-6 * emax, noise)):
                break
            prev = abs(h)
            t_ref = t[_exchange(t, e, d + 2)]
            if len(t_ref) < d + 2:
                raise ConvergenceError(f"exchange found fewer than {d + 2} alternations on {Y}")
            c, h = _level(f(t_ref), t_ref, d)
        else:
            raise ConvergenceError(f"exchange did not converge in {max_iter} iterations on {Y}")

        # continuous polish: exchange over grid plus local maximisers
        for _ in range(30):
            err = err_for(c)
            loc = _polish(err, t_ref)
            pts = np.unique(np.concatenate([t, loc]))
            e = err(pts)
            emax = float(np.max(np.abs(e)))
            if emax - abs(h) <= max(STAGNATION_TOL * emax, noise):
                break
            new = pts[_exchange(pts, e, d + 2)]
            if len(new) < d + 2:
                break
            t_ref = new
            c, h = _level(f(t_ref), t_ref, d)

        # certification on a 4x finer grid
        err = err_for(c)
        fine = np.unique(np.concatenate([_cheb_grid(4 * m), _polish(err, t_ref)]))
        sup = float(np.max(np.abs(err(fine))))
        if sup - abs(h) <= REFINE_TOL * sup + noise:
            E = abs(h)
            return MinimaxResult(Y, d, c, E, mid + half * t_ref, 1 if h >= 0 else -1, m, total_iter)
        m *= 2
    raise ConvergenceError(f"grid refinement did not certify minimax error on {Y}")


def _exact(Y, d, c, emax, t_ref, m, iters, mid, half) -> MinimaxResult:
    return MinimaxResult(Y, d, c, emax, mid + half * t_ref, 1, m, iters)


def certificate_rows(res: MinimaxResult, sigma: ActivationSpec) -> list[tuple[int, float, float]]:
    return [(i, float(a), float(r)) for i, (a, r) in
            enumerate(zip(res.alternation_points, res.residuals(sigma)))]


def write_certificate_csv(res: MinimaxResult, sigma: ActivationSpec, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "point", "residual"])
        for i, a, r in certificate_rows(res, sigma):
            w.writerow([i, repr(a), repr(r)])


def jackson_bound(omega_value: float) -> float:
    if omega_value < 0:
        raise ValueError("modulus value must be non-negative")
    return 6.0 * omega_value


@dataclass(frozen=True)
class AlternationCheck:
    ratio: float
    crossing: float
    passes: bool
    pair: tuple[int, int]


def alternation_ratio_check(res: MinimaxResult, sigma: ActivationSpec,
                            pair: tuple[int, int] = (1, 2), tol: float = 1e-12) -> AlternationCheck:
    """Bisect for a zero of sigma - p between alternation points pair[0] and pair[1]."""
    a = res.alternation_points
    lo, hi = float(a[pair[0]]), float(a[pair[1]])

    def e(y):
        return float(sigma(np.array([y]))[0] - res(np.array([y]))[0])

    elo, ehi = e(lo), e(hi)
    if elo == 0.0:
        y = lo
    elif ehi == 0.0:
        y = hi
    else:
        if np.sign(elo) == np.sign(ehi):
            raise ValueError(f"no sign change between alternation points {pair}")
        while hi - lo > tol:
            midp = 0.5 * (lo + hi)
            if midp <= lo or midp >= hi:
                break
            em = e(midp)
            if em == 0.0:
                lo = hi = midp
                break
            if np.sign(em) == np.sign(elo):
                lo, elo = midp, em
            else:
                hi = midp
        y = 0.5 * (lo + hi)
    Y = res.interval
    ratio = min(abs(y - Y.lo), abs(y - Y.hi)) / Y.length
    return AlternationCheck(ratio, y, ratio > 1.0 / (res.d + 2), pair)


def central_crossing(res: MinimaxResult, sigma: ActivationSpec) -> AlternationCheck:
    """The crossing with the largest ratio over all adjacent alternation pairs."""
    best = None
    for i in range(res.d + 1):
        try:
            chk = alternation_ratio_check(res, sigma, pair=(i, i + 1))
        except ValueError:
            continue
        if best is None or chk.ratio > best.ratio:
            best = chk
    if best is None:
        raise ValueError("no crossing found between any alternation points")
    return best


def is_non_polynomial(sigma: ActivationSpec, degree: int, probes=None) -> bool:
    """Probe whether sigma is outside P_{<=degree}: some minimax error exceeds 1e-8 * scale."""
    if probes is None:
        if sigma.domain_hint is not None:
            lo, hi = sigma.domain_hint
            probes = [Interval(lo, hi), Interval(lo, 0.5 * (lo + hi)), Interval(0.5 * (lo + hi), hi)]
        else:
            probes = [Interval(-1.0, 1.0), Interval(-4.0, 4.0), Interval(0.5, 3.0)]
    d = max(degree, 1)
    for Y in probes:
        ys = np.linspace(Y.lo, Y.hi, 257)
        scale = max(float(np.max(np.abs(sigma(ys)))), 1e-300)
        if degree == 0:
            vals = sigma(ys)
            if np.ptp(vals) > 2e-8 * scale:
                return True
            continue
        res = best_approximant(sigma, Y, d, grid_size=max(256, 10 * (d + 2)))
        if res.error > 1e-8 * scale:
            return True
    return False


# --------------------------------------------------------------- modulus of continuity

def _as_box(X) -> Box:
    return X if isinstance(X, Box) else Box(*X)


def default_modulus_grid(X: Box, delta: float) -> GridSpec:
    """Grid with spacing <= delta/4; 1025 points per axis in 1D, 65 otherwise, as floors."""
    floor = 1025 if X.n == 1 else 65
    res = []
    for ext in X.extent:
        r = floor
        while ext / (r - 1) > delta / 4:
            r = 2 * r - 1
        res.append(r)
    return GridSpec(X, tuple(res))


def _modulus_scan(vals: np.ndarray, spacing: np.ndarray, max_norm: float, stop_at=None):
    """Per-offset max |f(x+o) - f(x)| for offsets sorted by norm (optionally stopping early).

    Offsets are enumerated in shells of doubling radius so an early stop stays cheap.
    """
    rows = []
    inner = -1.0
    outer = min(max_norm, 4.0 * float(np.max(spacing)))
    while True:
        for row in _scan_shell(vals, spacing, inner, outer):
            rows.append(row)
            if stop_at is not None and row[1] >= stop_at:
                return rows
        if outer >= max_norm:
            return rows
        inner, outer = outer, min(max_norm, 2.0 * outer)


def _scan_shell(vals, spacing, inner, outer):
    n = len(spacing)
    for norm, o in offsets_by_norm(spacing, outer, inner):
        a = tuple(slice(max(0, v), vals.shape[i] - max(0, -v)) for i, v in enumerate(o))
        b = tuple(slice(max(0, -v), vals.shape[i] - max(0, v)) for i, v in enumerate(o))
        if any(s.stop <= s.start for s in a[:n]):
            continue
        yield norm, float(np.max(np.abs(vals[a] - vals[b])))


def estimate_modulus(f, X, delta: float, grid: GridSpec | None = None) -> float:
    """Lower estimate of omega_f(delta): max |f(x)-f(y)| over grid pairs with ||x-y|| <= delta."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    X = _as_box(X)
    grid = default_modulus_grid(X, delta) if grid is None else grid
    if grid.total == 0:
        raise ValueError("empty grid")
    if np.any(grid.spacing > delta / 4 * (1 + 1e-12)):
        raise ValueError("grid spacing must be at most delta/4")
    vals = evaluate_on_grid(f, grid)
    rows = _modulus_scan(vals, grid.spacing, delta)
    return max((r[1] for r in rows), default=0.0)


@dataclass(frozen=True)
class DEpsilonResult:
    d: int
    eps: float
    D: float
    threshold: float
    table: tuple[tuple[int, float, float], ...]  # (d, delta = D/2d, omega_hat)
    grid_resolution: tuple[int, ...]

    def __int__(self) -> int:
        return self.d

    def omega_at(self, d: int) -> float:
        for dd, _, w in self.table:
            if dd == d:
                return w
        raise KeyError(d)


def _refined_resolution(grid: GridSpec, X: Box, spacing: float) -> tuple[int, ...]:
    """Double (2r - 1, nested) each axis until its spacing is at most ``spacing``."""
    new = []
    for r, ext in zip(grid.resolution, X.extent):
        r = int(r)
        while ext / (r - 1) > spacing:
            r = 2 * r - 1
        new.append(r)
    return tuple(new)


def d_epsilon(f, X, eps: float, D: float | None = None, cap: int = 2000) -> DEpsilonResult:
    """Smallest d >= 2 with omega_hat(D/2d) < eps/6 for every output coordinate."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    X = _as_box(X)
    D = X.diameter if D is None else D
    thr = eps / 6.0
    if D == 0 or X.is_point:
        return DEpsilonResult(2, eps, D, thr, ((2, 0.0, 0.0),), (1,) * X.n)
    grid = default_modulus_grid(X, D / (2 * 2))
    while True:
        vals = evaluate_on_grid(f, grid)
        # smallest offset norm at which the variation reaches the threshold
        rows = _modulus_scan(vals, grid.spacing, D, stop_at=thr)
        hit = next((nrm for nrm, w in rows if w >= thr), None)
        if hit is None:
            d = 2
        else:
            d = max(2, int(math.floor(D / (2 * hit))) + 1)
            # strictness: D/2d must be < hit
            while D / (2 * d) >= hit:
                d += 1
        if d > cap:
            raise DegreeCapError(f"d_eps exceeds cap {cap}; eps too small for this grid")
        delta = D / (2 * d)
        if np.all(grid.spacing <= delta / MODULUS_REFINE):
            break
        new = _refined_resolution(grid, X, delta / MODULUS_REFINE)
        if math.prod(new) > MODULUS_BUDGET:
            # admissible grid first (spacing <= delta/4), then as fine as the budget allows
            new = _refined_resolution(grid, X, delta / 4)
            if math.prod(new) > MAX_GRID_POINTS:
                raise DegreeCapError("modulus grid would exceed the point cap")
            while math.prod(2 * r - 1 for r in new) <= MODULUS_BUDGET:
                new = tuple(2 * r - 1 for r in new)
            if new == tuple(grid.resolution):
                break
        grid = GridSpec(X, tuple(new))
    # tabulate the defining inequality around the answer on the final grid
    ds = sorted({max(2, d - 1), d, d + 1})
    full = _modulus_scan(vals, grid.spacing, D / (2 * ds[0]))
    table = []
    for dd in ds:
        delta = D / (2 * dd)
        w = max((v for nrm, v in full if nrm <= delta * (1 + 1e-12)), default=0.0)
        table.append((dd, delta, w))
    return DEpsilonResult(d, eps, D, thr, tuple(table), grid.resolution)


# ------------------------------------------------------------------- schedule diagnostics

@dataclass(frozen=True)
class ScheduleRow:
    k: int
    interval: Interval
    error: float
    ratio: float
    crossing: float
    passes: bool


def schedule_walk(sigma: ActivationSpec, schedule: ScaleSchedule, d: int, ks, centre: float = 0.0,
                  grid_size: int = 512, pair: tuple[int, int] | None = (1, 2)) -> list[ScheduleRow]:
    """Fit sigma_k on each Y_k, centring each interval on the previous crossing."""
    rows = []
    prev = None
    for k in ks:
        Y = schedule.interval(k, centre, prev)
        res = best_approximant(sigma, Y, d, grid_size=grid_size)
        if res.error == 0.0 or res.error <= 1e-13 * max(1.0, float(np.max(np.abs(sigma(np.array([Y.lo, Y.hi])))))):
            rows.append(ScheduleRow(k, Y, res.error, float("nan"), centre, False))
        else:
            chk = alternation_ratio_check(res, sigma, pair) if pair else central_crossing(res, sigma)
            rows.append(ScheduleRow(k, Y, res.error, chk.ratio, chk.crossing, chk.passes))
            centre = chk.crossing
        prev = Y
    return rows


def approx_growth_diagnostic(sigma: ActivationSpec, schedule: ScaleSchedule, d: int, gamma: float,
                             ks=range(1, 7), centre: float = 0.0) -> list[tuple[int, float, float]]:
    """Rows (k, E_d(sigma|Y_k), E_d / lambda_k**(1+gamma))."""
    ks = list(ks)
    if len(ks) < 3:
        raise ValueError("need at least 3 scales")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    out = []
    for row in schedule_walk(sigma, schedule, d, ks, centre=centre):
        lam = row.interval.length
        out.append((row.k, row.error, row.error / lam ** (1 + gamma)))
    return out


def tail_decreasing(values, tail: int = 3) -> bool:
    v = list(values)[-tail:]
    return all(b < a for a, b in zip(v, v[1:]))
