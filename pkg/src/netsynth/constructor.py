"""Synthesis pipelines: polynomial targets, continuous targets, frozen random directions.

All three share one step: for a scale k, approximate sigma on Y_k by its
minimax polynomial sigma_k, put every unit's pre-activation inside Y_k around a
crossing y_k of sigma - sigma_k, and solve the linear system that makes
sum_j a_j sigma_k(w_j . (x - x0) + y_k) equal f(x) - f(x0) exactly. Replacing
sigma_k by sigma costs at most sum_j |a_j| E_d, and the result is certified on
a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .activations import ActivationSpec
from .algebra import (SOFT_CONDITION_CAP, SingularMatrixError, build_vandermonde, is_nonsingular,
                      solve_coefficients)
from .grids import Box, GridSpec
from .intervals import Interval, ScaleSchedule
from .minimax import (ConvergenceError, DEpsilonResult, MinimaxResult, best_approximant,
                      central_crossing, d_epsilon, is_non_polynomial)
from .monomials import MonomialBasis, MultiPoly, enumerate_basis, eval_poly, multinomial, recenter
from .network import NetworkWeights, forward
from .verify import Certificate, certify

MAX_K = 40
MAX_REDRAWS = 16
ZERO_SUM_TOL = 1e-8
JITTER_SCALE = 1e-9
SURROGATE_FRACTION = 0.25
PILOT = 33


class ActivationError(ValueError):
    pass


class SingularDirectionsError(RuntimeError):
    def __init__(self, message: str, report: "ConstructionReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class ConstructionRequest:
    target: Sequence[MultiPoly] | Callable
    domain: Box
    sigma: ActivationSpec
    eps: float
    degree: int | None = None
    small_output_weights: float | None = None
    large_input_norms: float | None = None
    frozen_random_first_layer: tuple[float, int] | None = None  # (lambda, seed)
    schedule: str | ScaleSchedule = "auto"
    max_k: int = MAX_K
    max_redraws: int = MAX_REDRAWS
    seed: int = 0
    verify_resolution: int | tuple[int, ...] | None = None
    centre: float | None = None
    d_eps_cap: int = 2000
    max_surrogate_degree: int = 12
    max_feature_degree: int = 6
    directions: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (self.eps > 0):
            raise ValueError("eps must be positive")
        for name in ("small_output_weights", "large_input_norms"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.frozen_random_first_layer is not None:
            lam, _ = self.frozen_random_first_layer
            if not lam > 0:
                raise ValueError("random-feature radius must be positive")
            if self.small_output_weights is not None or self.large_input_norms is not None:
                raise ValueError("weight constraints cannot be combined with frozen random directions")
        if self.degree is not None and self.degree < 2:
            raise ValueError("degree must be at least 2")
        if self.is_polynomial:
            for p in self.target:
                if p.n != self.domain.n:
                    raise ValueError("target polynomial dimension does not match the domain")
        elif not callable(self.target):
            raise ValueError("target must be a list of MultiPoly or a callable")

    @property
    def is_polynomial(self) -> bool:
        return not callable(self.target) and all(isinstance(p, MultiPoly) for p in self.target)

    @property
    def m(self) -> int:
        if self.is_polynomial:
            return len(self.target)
        x0 = np.array([self.domain.anchor])
        return np.asarray(self.target(x0), dtype=float).reshape(1, -1).shape[1]

    def target_fn(self) -> Callable:
        if self.is_polynomial:
            polys = list(self.target)
            return lambda x: np.column_stack([eval_poly(p, np.atleast_2d(x)) for p in polys])
        f = self.target
        return lambda x: np.asarray(f(np.atleast_2d(x)), dtype=float).reshape(len(np.atleast_2d(x)), -1)

    def with_seed(self, seed: int) -> "ConstructionRequest":
        frl = self.frozen_random_first_layer
        return replace(self, seed=seed, frozen_random_first_layer=None if frl is None else (frl[0], seed))


@dataclass
class ConstructionReport:
    status: str
    message: str
    weights: NetworkWeights | None
    sigma: ActivationSpec
    eps: float
    certified_error: np.ndarray
    grid_error: np.ndarray
    slack: np.ndarray
    verification_resolution: tuple[int, ...]
    scale_index_used: int | None = None
    scale: float | None = None
    interval: tuple[float, float] | None = None
    crossing: float | None = None
    alternation_ratio: float | None = None
    crossing_pair: tuple[int, int] | None = None
    minimax_error: float | None = None
    direction_radius: float | None = None
    direction_source: str | None = None
    vandermonde_condition: float | None = None
    solve_condition: float | None = None
    solve_residual: float | None = None
    coefficient_norm: np.ndarray | None = None
    coefficient_sum: np.ndarray | None = None
    zero_sum_ok: bool | None = None
    error_bound: np.ndarray | None = None
    bound_ok: bool | None = None
    constraint_audit: dict = field(default_factory=dict)
    jittered: int = 0
    degree: int | None = None
    units: int | None = None
    active_units: int | None = None
    schedule: str | None = None
    seed: int = 0
    surrogate: dict = field(default_factory=dict)
    d_eps: DEpsilonResult | None = None
    history: list = field(default_factory=list)
    context: dict = field(default_factory=dict, repr=False)

    @property
    def success(self) -> bool:
        return self.status == "success"

    def summary(self) -> str:
        lines = [f"status: {self.status}" + (f" ({self.message})" if self.message else "")]
        if self.weights is not None:
            lines.append(f"hidden units: {self.weights.N} (active {self.active_units}), degree {self.degree}")
        lines.append("certified error: " + ", ".join(f"{e:.3e}" for e in np.atleast_1d(self.certified_error))
                     + f" (eps {self.eps:g}, grid {'x'.join(map(str, self.verification_resolution))})")
        if self.scale_index_used is not None:
            lines.append(f"scale k={self.scale_index_used}, lambda_k={self.scale:g}, "
                         f"interval=[{self.interval[0]:.6g}, {self.interval[1]:.6g}], crossing={self.crossing:.6g}")
        if self.constraint_audit:
            lines.append("constraints: " + ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                                                   for k, v in self.constraint_audit.items()))
        return "\n".join(lines)


# --------------------------------------------------------------------------- helpers

def resolve_schedule(req: ConstructionRequest) -> ScaleSchedule:
    s = req.schedule
    if isinstance(s, ScaleSchedule):
        return s
    if s == "auto":
        constrained = req.small_output_weights is not None or req.large_input_norms is not None
        return ScaleSchedule("expanding" if constrained else "contracting")
    return ScaleSchedule(s)


def shifted_gram_diag(cprime: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """D_i = c'_{|beta_i|} * multinomial(beta_i): nu(g_hat_j) = D * q(w_j)."""
    return np.array([cprime[sum(b)] * multinomial(b) for b in basis.indices])


def jitter_zero_coeffs(cprime: np.ndarray, E: float, seed: int) -> tuple[np.ndarray, int]:
    zero = cprime == 0.0
    if not np.any(zero):
        return cprime, 0
    rng = np.random.default_rng([seed, 7919])
    out = cprime.copy()
    signs = rng.choice([-1.0, 1.0], size=int(zero.sum()))
    out[zero] = signs * JITTER_SCALE * max(E, np.finfo(float).tiny)
    return out, int(zero.sum())


def choose_centre(sigma: ActivationSpec, d: int, length: float = 1.0) -> float:
    """Deterministic scan for a centre where the shifted approximant has balanced coefficients."""
    cands = sorted(np.round(np.arange(-3.0, 3.0001, 0.25), 2), key=lambda c: (abs(c), c))
    best, best_score = 0.0, -1.0
    half = 0.5 * length
    for c in cands:
        try:
            res = best_approximant(sigma, Interval(c - half, c + half), d, grid_size=max(256, 10 * (d + 2)))
            y = central_crossing(res, sigma).crossing
        except (ConvergenceError, ValueError):
            continue
        cp = np.abs(res.shifted_coeffs(y)) * half ** np.arange(d + 1)
        if cp.max() == 0:
            continue
        score = float(cp.min() / cp.max())
        if score > best_score * (1 + 1e-9):
            best, best_score = float(c), score
    return best


def schur_annulus_directions(n: int, d: int, radius: float) -> np.ndarray:
    """Schur-seed points rescaled so every norm lies in (radius/2, radius]."""
    N = math.comb(n + d, d)
    exps = np.array([(d + 1) ** i for i in range(n)], dtype=float)

    def norm(b):
        return float(np.sqrt(np.sum(b ** (2 * exps))))

    lo, hi = 1.0, 2.0
    target = 1.9 * norm(1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if norm(mid) < target else (lo, mid)
    bmax = lo
    base = 1.0 + (bmax - 1.0) * np.arange(1, N + 1) / N
    pts = np.column_stack([base ** e for e in exps])
    return pts * (radius / norm(bmax))


def annulus_directions(n: int, N: int, inner: float, outer: float, rng) -> np.ndarray:
    u = rng.standard_normal((N, n))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = outer - (outer - inner) * rng.random(N)  # (inner, outer]
    return u * r[:, None]


def sample_frozen_directions(n: int, count: int, lam: float, seed: int) -> np.ndarray:
    """Unit-sphere direction times radius uniform on (lam, 2 lam], one unit at a time."""
    rng = np.random.default_rng(seed)
    out = np.empty((count, n))
    for j in range(count):
        u = rng.standard_normal(n)
        while not np.any(u):
            u = rng.standard_normal(n)
        out[j] = u / np.linalg.norm(u) * (2 * lam - lam * rng.random())
    return out


def _target_system(req: ConstructionRequest, d: int, basis: MonomialBasis):
    """(nu(f0) as N x m matrix, f(x0) as m-vector) in the basis centred at x0."""
    x0 = np.array(req.domain.anchor)
    cols = []
    for p in req.target:
        q = recenter(p.with_degree(d) if p.basis.d != d else p, x0)
        cols.append(q.coeffs)
    V = np.column_stack(cols)
    fx0 = V[0].copy()
    V[0] = 0.0
    return V, fx0


def _assemble(W: np.ndarray, y: float, x0: np.ndarray, a: np.ndarray, fx0: np.ndarray,
              kind: str) -> NetworkWeights:
    bias = y - W @ x0
    W1 = np.vstack([bias, W.T])
    W2 = np.vstack([fx0.reshape(1, -1), a])
    return NetworkWeights(W1, W2, kind)


def _net_fn(weights: NetworkWeights, sigma: ActivationSpec):
    return lambda x: forward(weights, sigma, np.atleast_2d(x))


def _empty_report(req, status, message, m, **kw) -> ConstructionReport:
    z = np.full(m, math.inf)
    return ConstructionReport(status, message, None, req.sigma, req.eps, z, z, np.zeros(m), (), **kw)


def _report_from(req, status, message, weights, cert: Certificate, **kw) -> ConstructionReport:
    return ConstructionReport(status, message, weights, req.sigma, req.eps, cert.certified_error,
                              cert.grid_error, cert.slack, cert.resolution, **kw)


# ------------------------------------------------------------------ polynomial targets

def construct_polynomial(req: ConstructionRequest) -> ConstructionReport:
    """Exactly C(n+d, d) hidden units with certified sup error below eps."""
    if not req.is_polynomial:
        raise ValueError("construct_polynomial needs polynomial targets")
    box = req.domain
    n, m = box.n, len(req.target)
    deg = max([p.degree for p in req.target] + [2])
    d = req.degree if req.degree is not None else deg
    if d < deg:
        raise ValueError(f"requested degree {d} is below the target degree {deg}")
    basis = enumerate_basis(n, d)
    N = len(basis)
    sigma = req.sigma
    if not is_non_polynomial(sigma, d - 1):
        raise ActivationError("activation fails non-polynomial probe")
    f = req.target_fn()
    x0 = np.array(box.anchor)
    V, fx0 = _target_system(req, d, basis)
    schedule = resolve_schedule(req)
    kind = sigma.kind

    if box.is_point or box.radius == 0:
        W = schur_annulus_directions(n, d, 1.0)
        weights = _assemble(W, 0.0, x0, np.zeros((N, m)), fx0, kind)
        cert = certify(f, _net_fn(weights, sigma), box, req.eps)
        return _report_from(req, "success", "degenerate domain matched by output biases", weights, cert,
                            degree=d, units=N, active_units=N, schedule=schedule.direction, seed=req.seed)

    rX = box.radius
    centre = req.centre if req.centre is not None else choose_centre(sigma, d, schedule.length(0))
    history: list[dict] = []
    best: tuple | None = None
    prev_Y = None
    prev_norm = None
    for k in range(req.max_k + 1):
        Y = schedule.interval(k, centre, prev_Y)
        prev_Y = Y
        row = {"k": k, "lambda": Y.length, "lo": Y.lo, "hi": Y.hi}
        history.append(row)
        try:
            mm = best_approximant(sigma, Y, d)
            chk = central_crossing(mm, sigma)
        except (ConvergenceError, ValueError) as exc:
            row["outcome"] = f"minimax failed: {exc}"
            continue
        row.update(E_d=mm.error, ratio=chk.ratio, crossing=chk.crossing)
        if not chk.passes:
            row["outcome"] = "crossing ratio below 1/(d+2)"
            continue
        y = chk.crossing
        centre = y
        lam_p = min(y - Y.lo, Y.hi - y) / rX
        row["direction_radius"] = lam_p
        inner = 0.5 * lam_p
        if req.large_input_norms is not None:
            if inner <= req.large_input_norms:
                row["outcome"] = "annulus below the input-norm constraint"
                continue
        cprime, jit = jitter_zero_coeffs(mm.shifted_coeffs(y), mm.error, req.seed)
        Dg = shifted_gram_diag(cprime, basis)
        attempts = [("schur", schur_annulus_directions(n, d, lam_p))]
        attempts += [(f"random:{i}", None) for i in range(1, req.max_redraws + 1)]
        for source, W in attempts:
            if W is None:
                W = annulus_directions(n, N, inner, lam_p, np.random.default_rng([req.seed, k, int(source[7:])]))
            Q = build_vandermonde(W, basis)
            ns = is_nonsingular(Q)
            if not ns or ns.condition > SOFT_CONDITION_CAP:
                continue
            try:
                sol = solve_coefficients(Dg[:, None] * Q.matrix, V)
            except SingularMatrixError:
                continue
            a = sol.solution
            if req.small_output_weights is not None and np.max(np.abs(a)) >= req.small_output_weights:
                row.setdefault("outcome", f"max |a| = {np.max(np.abs(a)):.3g} violates output-weight bound")
                continue
            weights = _assemble(W, y, x0, a, fx0, kind)
            net = _net_fn(weights, sigma)
            pilot = certify(f, net, box, req.eps, resolution=(PILOT,) * n)
            if best is None or pilot.worst < best[0]:
                best = (pilot.worst, k, weights, pilot)
            if np.max(pilot.grid_error) >= req.eps:
                row.setdefault("outcome", f"pilot grid error {np.max(pilot.grid_error):.3g}")
                continue
            cert = certify(f, net, box, req.eps, resolution=req.verify_resolution)
            anorm = np.abs(a).sum(axis=0)
            row.update(coefficient_norm=float(anorm.max()), certified=cert.worst, source=source)
            if not cert.passes(req.eps):
                row["outcome"] = f"certified error {cert.worst:.3g}"
                if cert.worst < best[0]:
                    best = (cert.worst, k, weights, cert)
                continue
            row["outcome"] = "accepted"
            asum = a.sum(axis=0)
            bound = anorm * mm.error
            scale = 1.0 + np.abs(fx0) + anorm * float(np.max(np.abs(sigma(np.array([Y.lo, Y.hi, y])))))
            shrink = None if prev_norm is None else bool(np.all(anorm <= prev_norm * 1.1))
            audit = {"max_output_weight": weights.max_output_weight, "min_input_norm": weights.min_input_norm}
            if req.small_output_weights is not None:
                audit["small_output_weights_ok"] = weights.max_output_weight < req.small_output_weights
            if req.large_input_norms is not None:
                audit["large_input_norms_ok"] = weights.min_input_norm > req.large_input_norms
            return _report_from(
                req, "success", "", weights, cert,
                scale_index_used=k, scale=Y.length, interval=(Y.lo, Y.hi), crossing=y,
                alternation_ratio=chk.ratio, crossing_pair=chk.pair, minimax_error=mm.error,
                direction_radius=lam_p, direction_source=source, vandermonde_condition=ns.condition,
                solve_condition=sol.condition_estimate, solve_residual=sol.residual_norm,
                coefficient_norm=anorm, coefficient_sum=asum,
                zero_sum_ok=bool(np.all(np.abs(asum) <= ZERO_SUM_TOL * np.maximum(anorm, 1e-300))),
                error_bound=bound,
                bound_ok=bool(np.all(cert.grid_error <= bound * (1 + 1e-6) + 1e-12 * scale)),
                constraint_audit=audit, jittered=jit, degree=d, units=N, active_units=N,
                schedule=schedule.direction, seed=req.seed, history=history,
                context={"unit_directions": W / lam_p, "nu_f0": V[1:].copy(), "basis": basis,
                         "coefficients": a, "shrinking": shrink, "schedule_obj": schedule})
        if "coefficient_norm" in row:
            prev_norm = np.array([row["coefficient_norm"]])
        row.setdefault("outcome", "no admissible directions")

    msg = f"scale-escalation cap k={req.max_k} reached"
    if best is None:
        return _empty_report(req, "failure", msg, m, degree=d, units=N, active_units=N,
                             schedule=schedule.direction, seed=req.seed, history=history)
    _, k, weights, cert = best
    return _report_from(req, "failure", msg + " (best-so-far weights returned)", weights, cert,
                        scale_index_used=k, degree=d, units=N, active_units=N,
                        schedule=schedule.direction, seed=req.seed, history=history,
                        constraint_audit={"max_output_weight": weights.max_output_weight,
                                          "min_input_norm": weights.min_input_norm})


# ------------------------------------------------------------------ continuous targets

@dataclass(frozen=True)
class ChebyshevSurrogate:
    """Least-squares fit in tensor Chebyshev polynomials of total degree <= d."""

    box: Box
    d: int
    coeffs: np.ndarray  # (len(basis), m)

    @classmethod
    def fit(cls, f, box: Box, d: int) -> "ChebyshevSurrogate":
        basis = enumerate_basis(box.n, d)
        per_axis = max(4 * (d + 1), 65) if box.n == 1 else max(2 * (d + 1), 17)
        nodes = np.cos(np.pi * (np.arange(per_axis) + 0.5) / per_axis)
        mesh = np.meshgrid(*([nodes] * box.n), indexing="ij")
        T = np.stack([g.reshape(-1) for g in mesh], axis=1)
        X = cls._from_t(box, T)
        A = cls._design(T, basis)
        F = np.asarray(f(X), dtype=float).reshape(len(X), -1)
        coeffs = np.linalg.lstsq(A, F, rcond=None)[0]
        return cls(box, d, coeffs)

    @staticmethod
    def _from_t(box, T):
        lo, hi = np.array(box.lo), np.array(box.hi)
        return lo + (T + 1) * 0.5 * (hi - lo)

    @staticmethod
    def _design(T, basis):
        d = basis.d
        cheb = [np.polynomial.chebyshev.chebvander(T[:, i], d) for i in range(T.shape[1])]
        A = np.ones((len(T), len(basis)))
        for i, alpha in enumerate(basis.indices):
            for ax, a in enumerate(alpha):
                if a:
                    A[:, i] *= cheb[ax][:, a]
        return A

    def __call__(self, x):
        x = np.atleast_2d(x)
        lo, hi = np.array(self.box.lo), np.array(self.box.hi)
        T = 2 * (x - lo) / (hi - lo) - 1
        return self._design(T, enumerate_basis(self.box.n, self.d)) @ self.coeffs

    def to_multipoly(self, center) -> list[MultiPoly]:
        """Exact re-expansion in monomials of (x - center)."""
        from numpy.polynomial import chebyshev as C, polynomial as P
        n, d = self.box.n, self.d
        basis = enumerate_basis(n, d)
        x0 = np.asarray(center, dtype=float)
        lo, hi = np.array(self.box.lo), np.array(self.box.hi)
        # power coefficients of T_k((x - mid)/half) in u = x - x0, per axis
        conv = []
        for ax in range(n):
            rows = []
            for k in range(d + 1):
                e = np.zeros(k + 1)
                e[k] = 1.0
                s = C.Chebyshev(e, domain=[lo[ax] - x0[ax], hi[ax] - x0[ax]])
                c = s.convert(kind=P.Polynomial, domain=[-1, 1], window=[-1, 1]).coef
                rows.append(np.pad(c, (0, d + 1 - len(c))))
            conv.append(np.array(rows))
        out = np.zeros((len(basis), self.coeffs.shape[1]))
        for i, alpha in enumerate(basis.indices):
            # product over axes of the 1D expansions
            terms = {(): 1.0}
            for ax, a in enumerate(alpha):
                row = conv[ax][a]
                terms = {key + (e,): v * row[e] for key, v in terms.items() for e in range(a + 1) if row[e] != 0}
            for key, v in terms.items():
                out[basis.position(key)] += v * self.coeffs[i]
        return [MultiPoly(basis, x0, out[:, t]) for t in range(out.shape[1])]


def fit_surrogate(f, box: Box, eps: float, d_cap: int, budget: float, start: int = 2):
    """Smallest degree whose monomial surrogate certifies within budget; None if none does."""
    tried = []
    for ds in range(start, d_cap + 1):
        sur = ChebyshevSurrogate.fit(f, box, ds)
        polys = sur.to_multipoly(box.anchor)

        def pf(x, polys=polys):
            return np.column_stack([eval_poly(p, np.atleast_2d(x)) for p in polys])

        cert = certify(f, pf, box, eps)
        tried.append((ds, cert.worst))
        if cert.worst <= budget:
            return ds, polys, cert, tried
    return None, None, None, tried


def _pad_units(weights: NetworkWeights, total: int, radius: float, y: float, x0: np.ndarray,
               seed: int) -> NetworkWeights:
    extra = total - weights.N
    if extra <= 0:
        return weights
    rng = np.random.default_rng([seed, 104729])
    W = annulus_directions(weights.n, extra, 0.5 * radius, radius, rng)
    W1 = np.hstack([weights.W1, np.vstack([y - W @ x0, W.T])])
    W2 = np.vstack([weights.W2, np.zeros((extra, weights.m))])
    return NetworkWeights(W1, W2, weights.sigma_kind)


def construct_continuous(req: ConstructionRequest) -> ConstructionReport:
    """N = C(n + d_eps, d_eps) units; a low-degree surrogate carries the active units."""
    box = req.domain
    f = req.target_fn()
    de = d_epsilon(f, box, req.eps, box.diameter, cap=req.d_eps_cap)
    n = box.n
    total = math.comb(n + de.d, de.d)
    budget = SURROGATE_FRACTION * req.eps
    cap = max(req.max_surrogate_degree, 2)
    ds, polys, scert, tried = fit_surrogate(f, box, req.eps, min(cap, de.d), budget)
    note = ""
    if ds is None and de.d < cap:
        ds, polys, scert, more = fit_surrogate(f, box, req.eps, cap, budget, start=de.d + 1)
        tried += more
        if ds is not None:
            total = math.comb(n + ds, ds)
            note = f"surrogate degree {ds} exceeds d_eps={de.d}; unit count follows the surrogate"
    surrogate = {"degree": ds, "tried": tried, "error": None if scert is None else scert.worst}
    m = req.m
    if ds is None:
        return _empty_report(req, "failure", "surrogate fit failed to reach the error budget", m,
                             d_eps=de, surrogate=surrogate, units=total)
    eps1 = scert.worst
    inner = construct_polynomial(replace(req, target=polys, eps=req.eps - eps1, degree=ds))
    surrogate["inner_certified"] = inner.certified_error.tolist()
    if inner.weights is None:
        return replace(inner, d_eps=de, surrogate=surrogate, units=total)
    y = inner.crossing if inner.crossing is not None else 0.0
    radius = inner.direction_radius if inner.direction_radius else 1.0
    weights = _pad_units(inner.weights, total, radius, y, np.array(box.anchor), req.seed)
    cert = certify(f, _net_fn(weights, req.sigma), box, req.eps, resolution=req.verify_resolution)
    ok = inner.success and cert.passes(req.eps)
    status = "success" if ok else "failure"
    msg = note if ok else (inner.message or f"certified error {cert.worst:.3g} not below eps")
    bound = None if inner.error_bound is None else inner.error_bound + eps1
    return replace(inner, status=status, message=msg, weights=weights, eps=req.eps,
                   certified_error=cert.certified_error, grid_error=cert.grid_error, slack=cert.slack,
                   verification_resolution=cert.resolution, units=weights.N, active_units=inner.weights.N,
                   degree=de.d if ds <= de.d else ds, d_eps=de, surrogate=surrogate, error_bound=bound,
                   bound_ok=None if bound is None else bool(np.all(cert.grid_error <= bound * (1 + 1e-6) + 1e-9)))


# ------------------------------------------------------------------ frozen random directions

BIAS_CENTRES = tuple(sorted(np.round(np.linspace(-4.0, 4.0, 33), 6), key=lambda c: (abs(c), c)))


def construct_random_features(req: ConstructionRequest) -> ConstructionReport:
    """Directions frozen from the sampling law; only biases (y_k rule) and W2 are solved."""
    if req.frozen_random_first_layer is None:
        raise ValueError("request has no frozen_random_first_layer")
    lam, seed = req.frozen_random_first_layer
    box = req.domain
    n = box.n
    sigma = req.sigma
    f = req.target_fn()
    x0 = np.array(box.anchor)
    eps_inner = req.eps
    surrogate = {}
    if req.is_polynomial:
        polys = list(req.target)
        d0 = max([p.degree for p in polys] + [2])
    else:
        budget = SURROGATE_FRACTION * req.eps
        ds, polys, scert, tried = fit_surrogate(f, box, req.eps, req.max_surrogate_degree, budget)
        if ds is None:
            return _empty_report(req, "failure", "surrogate fit failed", req.m, seed=seed)
        d0 = max(ds, 2)
        surrogate = {"degree": ds, "error": scert.worst, "tried": tried}
    if req.degree is not None:
        d0 = max(d0, req.degree)
    dmax = max(d0, req.max_feature_degree)
    if not is_non_polynomial(sigma, d0 - 1):
        raise ActivationError("activation fails non-polynomial probe")
    Nmax = math.comb(n + dmax, dmax)
    if req.directions is not None:
        dirs = np.asarray(req.directions, dtype=float).reshape(-1, n)
        dmax = max(dd for dd in range(d0, dmax + 1) if math.comb(n + dd, dd) <= len(dirs)) \
            if len(dirs) >= math.comb(n + d0, d0) else d0
    else:
        dirs = sample_frozen_directions(n, Nmax, lam, seed)
    sub = replace(req, target=polys)
    rX = box.radius
    history = []
    best = None
    m = len(polys)
    for d in range(d0, dmax + 1):
        basis = enumerate_basis(n, d)
        N = len(basis)
        if len(dirs) < N:
            raise ValueError(f"need {N} directions, got {len(dirs)}")
        W = dirs[:N]
        Q = build_vandermonde(W, basis)
        ns = is_nonsingular(Q)
        if not ns:
            rep = _empty_report(req, "singular", f"non-bias Vandermonde of the drawn directions is singular "
                                f"(degree {d}, margin {ns.margin:.3g})", m, seed=seed, degree=d, units=N)
            raise SingularDirectionsError(rep.message, rep)
        V, fx0 = _target_system(sub, d, basis)
        R = float(np.max(np.linalg.norm(W, axis=1))) * rX
        half = max(1.25 * R, 1e-12)
        fitpts = GridSpec(box, (257,) * n if n == 1 else (PILOT,) * n).points() if not box.is_point \
            else np.array([x0])
        F = f(fitpts)
        for c in BIAS_CENTRES:
            Y = Interval(c - half, c + half)
            row = {"degree": d, "units": N, "centre": c}
            history.append(row)
            try:
                mm = best_approximant(sigma, Y, d)
                chk = central_crossing(mm, sigma)
            except (ConvergenceError, ValueError) as exc:
                row["outcome"] = f"minimax failed: {exc}"
                continue
            y = chk.crossing
            candidates = []
            cprime, _ = jitter_zero_coeffs(mm.shifted_coeffs(y), mm.error, seed)
            try:
                sol = solve_coefficients(shifted_gram_diag(cprime, basis)[:, None] * Q.matrix, V)
                candidates.append(("identity", _assemble(W, y, x0, sol.solution, fx0, sigma.kind)))
            except SingularMatrixError:
                pass
            H = sigma(y - W @ x0 + fitpts @ W.T)
            A = np.hstack([np.ones((len(fitpts), 1)), H])
            W2 = np.empty((N + 1, m))
            for t in range(m):
                W2[:, t] = np.linalg.lstsq(A, F[:, t], rcond=None)[0]
            candidates.append(("least-squares", NetworkWeights(np.vstack([y - W @ x0, W.T]), W2, sigma.kind)))
            for name, weights in candidates:
                net = _net_fn(weights, sigma)
                pilot = certify(f, net, box, eps_inner, resolution=(PILOT,) * n)
                if best is None or pilot.worst < best[0]:
                    best = (pilot.worst, d, weights, pilot)
                if np.max(pilot.grid_error) >= eps_inner:
                    continue
                cert = certify(f, net, box, eps_inner, resolution=req.verify_resolution)
                if cert.passes(req.eps):
                    row["outcome"] = f"accepted ({name})"
                    return _report_from(
                        req, "success", "", weights, cert, crossing=y, interval=(Y.lo, Y.hi),
                        alternation_ratio=chk.ratio, crossing_pair=chk.pair, minimax_error=mm.error,
                        direction_source=f"frozen:{name}", vandermonde_condition=ns.condition,
                        degree=d, units=N, active_units=N, seed=seed, surrogate=surrogate, history=history,
                        constraint_audit={"min_input_norm": weights.min_input_norm,
                                          "directions_frozen": bool(np.array_equal(weights.directions, W))})
            row.setdefault("outcome", "not certified")
    msg = "no bias placement certified within the degree cap"
    if best is None:
        return _empty_report(req, "failure", msg, m, seed=seed, history=history)
    _, d, weights, cert = best
    return _report_from(req, "failure", msg, weights, cert, degree=d, units=weights.N,
                        active_units=weights.N, seed=seed, history=history)


def construct(req: ConstructionRequest) -> ConstructionReport:
    """Dispatch on the request: frozen directions, polynomial target, or black box."""
    if req.frozen_random_first_layer is not None:
        return construct_random_features(req)
    if req.is_polynomial:
        return construct_polynomial(req)
    return construct_continuous(req)


# ------------------------------------------------------------------ geometric diagnostics

def cayley_menger(points: np.ndarray) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    k = len(P)
    D2 = np.sum((P[:, None, :] - P[None, :, :]) ** 2, axis=-1)
    M = np.ones((k + 1, k + 1))
    M[0, 0] = 0.0
    M[1:, 1:] = D2
    return M


def simplex_volume(points: np.ndarray) -> float:
    """K-volume of the simplex on K+1 points, from the Gram determinant of edge vectors."""
    P = np.asarray(points, dtype=float)
    E = (P[1:] - P[0]).T
    K = E.shape[1]
    g = np.linalg.det(E.T @ E) if K else 1.0
    return math.sqrt(max(g, 0.0)) / math.factorial(K)


def simplex_height_diagnostic(points, apex_index: int) -> float:
    """Distance from the apex to the affine hull of the other points (Cayley-Menger ratio).

    With M the bordered squared-distance matrix of all points and M' that of the
    opposite face, h^2 = -det(M) / (2 det(M')).
    """
    P = np.asarray(points, dtype=float)
    k = len(P)
    if k < 2:
        raise ValueError("need at least two points")
    if not 0 <= apex_index < k:
        raise IndexError("apex index out of range")
    face = np.delete(P, apex_index, axis=0)
    scale = float(np.max(np.sum((P - P.mean(axis=0)) ** 2, axis=1))) or 1.0
    M = cayley_menger(P / math.sqrt(scale))
    Mf = cayley_menger(face / math.sqrt(scale))
    dM, dMf = np.linalg.det(M), np.linalg.det(Mf)
    if _affinely_dependent(P) or dMf == 0:
        raise ValueError("degenerate simplex (points are affinely dependent)")
    h2 = -dM / (2.0 * dMf)
    if h2 <= 0:
        raise ValueError("degenerate simplex (non-positive squared height)")
    return math.sqrt(h2 * scale)


def _affinely_dependent(P: np.ndarray, rtol: float = 1e-12) -> bool:
    sv = np.linalg.svd(P[1:] - P[0], compute_uv=False)
    return len(sv) < len(P) - 1 or sv[0] == 0 or sv[-1] <= rtol * sv[0]


def projection_height(points, apex_index: int) -> float:
    """Distance from the apex to the affine hull of the other points, via QR of the face edges.

    Stable on strongly anisotropic simplices where the Cayley-Menger determinants underflow.
    """
    P = np.asarray(points, dtype=float)
    if _affinely_dependent(P):
        raise ValueError("degenerate simplex (points are affinely dependent)")
    face = np.delete(P, apex_index, axis=0)
    v = P[apex_index] - face[0]
    if len(face) == 1:
        return float(np.linalg.norm(v))
    Q, _ = np.linalg.qr((face[1:] - face[0]).T)
    return float(np.linalg.norm(v - Q @ (Q.T @ v)))


def volume_ratio_height(points, apex_index: int) -> float:
    P = np.asarray(points, dtype=float)
    K = len(P) - 1
    return K * simplex_volume(P) / simplex_volume(np.delete(P, apex_index, axis=0))


def height_scaling_slope(base: np.ndarray, exponents, lambdas) -> tuple[float, list[float]]:
    """Fit log h(lam) vs log lam, where point i is scaled by lam**r_i and h is the largest height."""
    base = np.asarray(base, dtype=float)
    r = np.asarray(exponents, dtype=float)
    hs = []
    for lam in lambdas:
        P = base * lam ** r[:, None]
        hs.append(max(simplex_height_diagnostic(P, j) for j in range(len(P))))
    slope = float(np.polyfit(np.log(lambdas), np.log(hs), 1)[0])
    return slope, hs


@dataclass(frozen=True)
class BarycentricRow:
    k: int
    spread: float  # max_j |b_j - 1/N| over outputs
    spread_zero: float  # same for the origin
    gap: float  # max_j |b_j - b'_j| = max |a_j|
    min_height: float
    bound: float  # c_f / min height
    bound_ok: bool
    note: str = ""


def barycentric_diagnostic(report: ConstructionReport, k_range) -> list[BarycentricRow]:
    """Barycentric coordinates of nu_hat(f0) and 0 in the simplex of the nu_hat(g_hat_j), per k."""
    ctx = report.context
    if "unit_directions" not in ctx:
        raise ValueError("report does not come from a polynomial-path construction")
    U, nu, basis = ctx["unit_directions"], ctx["nu_f0"], ctx["basis"]
    schedule: ScaleSchedule = ctx["schedule_obj"]
    sigma = report.sigma
    N = len(basis)
    rX = report.direction_radius and (min(report.crossing - report.interval[0],
                                          report.interval[1] - report.crossing) / report.direction_radius)
    c_f = float(np.max(np.linalg.norm(nu, axis=0)))
    rows = []
    for k in k_range:
        Y = schedule.interval(k, report.crossing)
        try:
            mm = best_approximant(sigma, Y, basis.d)
            chk = central_crossing(mm, sigma)
        except (ConvergenceError, ValueError) as exc:
            rows.append(BarycentricRow(k, math.nan, math.nan, math.nan, math.nan, math.nan, False, str(exc)))
            continue
        y = chk.crossing
        lam_p = min(y - Y.lo, Y.hi - y) / rX
        cprime = mm.shifted_coeffs(y)
        G = shifted_gram_diag(cprime, basis)[:, None] * build_vandermonde(U * lam_p, basis).matrix
        P = G[1:]  # columns are the simplex vertices in R^{N-1}
        A = np.vstack([P, np.ones((1, N))])
        try:
            B = np.linalg.solve(A, np.vstack([nu, np.ones((1, nu.shape[1]))]))
            B0 = np.linalg.solve(A, np.concatenate([np.zeros(N - 1), [1.0]]))
            hs = [projection_height(P.T, j) for j in range(N)]
        except (np.linalg.LinAlgError, ValueError) as exc:
            rows.append(BarycentricRow(k, math.nan, math.nan, math.nan, math.nan, math.nan, False, str(exc)))
            continue
        gap = float(np.max(np.abs(B - B0[:, None])))
        hmin = float(min(hs))
        bound = c_f / hmin
        rows.append(BarycentricRow(k, float(np.max(np.abs(B - 1.0 / N))), float(np.max(np.abs(B0 - 1.0 / N))),
                                   gap, hmin, bound, gap <= bound * (1 + 1e-8) + 1e-14))
    return rows
