"""Multivariate monomial basis in colexicographic order and polynomials over it.

Indexing is 0-based internally; position i here is basis element q_{i+1}
in 1-based notation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

MultiIndex = tuple[int, ...]


def colex_less(a: MultiIndex, b: MultiIndex) -> bool:
    """a < b iff a_i < b_i at the largest index where they differ."""
    for ai, bi in zip(reversed(a), reversed(b)):
        if ai != bi:
            return ai < bi
    return False


@lru_cache(maxsize=256)
def _indices(n: int, d: int) -> tuple[MultiIndex, ...]:
    # all tuples with |alpha| <= d, sorted by the reversed tuple (= colex)
    out = [a for a in itertools.product(range(d + 1), repeat=n) if sum(a) <= d]
    out.sort(key=lambda a: tuple(reversed(a)))
    return tuple(out)


@dataclass(frozen=True)
class MonomialBasis:
    n: int
    d: int
    indices: tuple[MultiIndex, ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def exponents(self) -> np.ndarray:
        """(N, n) integer array of exponents."""
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.n)

    @property
    def degrees(self) -> np.ndarray:
        return self.exponents.sum(axis=1)

    def position(self, alpha: MultiIndex) -> int:
        return self._lookup[tuple(alpha)]

    @property
    def _lookup(self) -> dict[MultiIndex, int]:
        return _lookup_table(self.n, self.d)

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        """Monomial values q_i(x) for a batch x of shape (P, n); returns (P, N)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.n:
            raise ValueError(f"points have dimension {x.shape[1]}, basis expects {self.n}")
        # powers[k][:, j] = x_j ** k
        powers = [np.ones_like(x)]
        for _ in range(self.d):
            powers.append(powers[-1] * x)
        out = np.ones((x.shape[0], len(self)))
        for i, alpha in enumerate(self.indices):
            for j, a in enumerate(alpha):
                if a:
                    out[:, i] *= powers[a][:, j]
        return out


@lru_cache(maxsize=256)
def _lookup_table(n: int, d: int) -> dict[MultiIndex, int]:
    return {a: i for i, a in enumerate(_indices(n, d))}


def enumerate_basis(n: int, d: int) -> MonomialBasis:
    if n < 1:
        raise ValueError("n must be at least 1")
    if d < 0:
        raise ValueError("d must be non-negative")
    return MonomialBasis(n=n, d=d, indices=_indices(n, d))


def multinomial(alpha: MultiIndex) -> int:
    out = math.factorial(sum(alpha))
    for a in alpha:
        out //= math.factorial(a)
    return out


def factorial_product(alpha: MultiIndex) -> int:
    return math.prod(math.factorial(a) for a in alpha)


@dataclass(frozen=True)
class MultiPoly:
    """Polynomial sum_i coeffs[i] * q_i(x - center) over a colex basis."""

    basis: MonomialBasis
    center: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        x0 = np.asarray(self.center, dtype=float).reshape(-1).copy()
        if c.shape != (len(self.basis),):
            raise ValueError(f"expected {len(self.basis)} coefficients, got shape {c.shape}")
        if x0.shape != (self.basis.n,):
            raise ValueError(f"center must have dimension {self.basis.n}")
        c.flags.writeable = False
        x0.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "center", x0)

    @classmethod
    def from_terms(cls, n: int, terms: dict[MultiIndex, float], center=None, d: int | None = None):
        """Build from {exponent tuple: coefficient}."""
        deg = max((sum(a) for a in terms), default=0)
        d = deg if d is None else d
        if deg > d:
            raise ValueError(f"term of degree {deg} exceeds basis degree {d}")
        basis = enumerate_basis(n, d)
        coeffs = np.zeros(len(basis))
        for alpha, v in terms.items():
            if len(alpha) != n:
                raise ValueError(f"exponent {alpha} does not have length {n}")
            coeffs[basis.position(tuple(alpha))] += v
        return cls(basis, np.zeros(n) if center is None else center, coeffs)

    @classmethod
    def constant(cls, n: int, value: float, d: int = 0, center=None):
        return cls.from_terms(n, {(0,) * n: value}, center=center, d=d)

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(self.basis.degrees[nz].max()) if nz.size else 0

    @property
    def nu_hat(self) -> np.ndarray:
        """Coefficient vector without the constant coordinate."""
        return self.coeffs[1:].copy()

    def terms(self) -> dict[MultiIndex, float]:
        return {a: float(c) for a, c in zip(self.basis.indices, self.coeffs) if c != 0.0}

    def __call__(self, x) -> np.ndarray | float:
        return eval_poly(self, x)

    def with_degree(self, d: int) -> "MultiPoly":
        """Same polynomial embedded in (or truncated to, if exact) a degree-d basis."""
        if d < self.degree:
            raise ValueError(f"cannot represent degree {self.degree} in degree-{d} basis")
        return MultiPoly.from_terms(self.n, self.terms(), center=self.center, d=d)

    def derivative(self, alpha: MultiIndex) -> "MultiPoly":
        """Partial derivative d^alpha, computed on exponents (same basis and center)."""
        basis = self.basis
        out = np.zeros(len(basis))
        for c, beta in zip(self.coeffs, basis.indices):
            if c == 0.0 or any(b < a for a, b in zip(alpha, beta)):
                continue
            factor = 1
            for a, b in zip(alpha, beta):
                factor *= math.perm(b, a)
            gamma = tuple(b - a for a, b in zip(alpha, beta))
            out[basis.position(gamma)] += c * factor
        return MultiPoly(basis, self.center, out)


def eval_poly(p: MultiPoly, x) -> np.ndarray | float:
    """Evaluate at one point (returns float) or a batch of shape (P, n)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
        if p.n == 1 and arr.shape[1] != 1:
            arr = arr.reshape(-1, 1)
    if arr.shape[1] != p.n:
        raise ValueError(f"point dimension {arr.shape[1]} does not match polynomial dimension {p.n}")
    vals = p.basis.evaluate(arr - p.center) @ p.coeffs
    if single and vals.shape[0] == 1:
        return float(vals[0])
    return vals


def recenter(p: MultiPoly, new_center) -> MultiPoly:
    """Re-expand p in powers of (x - new_center); evaluation is unchanged."""
    c_new = np.asarray(new_center, dtype=float).reshape(-1)
    if c_new.shape != (p.n,):
        raise ValueError(f"new center must have dimension {p.n}")
    shift = c_new - p.center
    basis = p.basis
    out = np.zeros(len(basis))
    # (x - c_old)^beta = prod_j ((x - c_new)_j + shift_j)^beta_j
    for c, beta in zip(p.coeffs, basis.indices):
        if c == 0.0:
            continue
        ranges = [range(b + 1) for b in beta]
        for gamma in itertools.product(*ranges):
            w = c
            for g, b, s in zip(gamma, beta, shift):
                if g != b:
                    w *= math.comb(b, g) * s ** (b - g)
            out[basis.position(gamma)] += w
    return MultiPoly(basis, c_new, out)
