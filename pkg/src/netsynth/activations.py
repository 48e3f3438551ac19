"""Activation functions: named builtins, sample tables, or plain callables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import expit


def _softplus(y):
    return np.logaddexp(0.0, y)


def _quadratic_tanh(y):
    # non-polynomial, but grows like y**2: useful when output weights must be small
    return 1.0 + y + y * y + np.tanh(y)


BUILTINS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "logistic": expit,
    "tanh": np.tanh,
    "rectifier": lambda y: np.maximum(y, 0.0),
    "gaussian": lambda y: np.exp(-y * y),
    "softplus": _softplus,
    "quadratic_tanh": _quadratic_tanh,
}


@dataclass(frozen=True)
class ActivationSpec:
    kind: str
    table: np.ndarray | None = field(default=None, repr=False)
    domain_hint: tuple[float, float] | None = None
    fn: Callable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[1] != 2 or t.shape[0] < 2:
                raise ValueError("table activation needs at least 2 (y, sigma) rows")
            if np.any(np.diff(t[:, 0]) <= 0):
                raise ValueError("table abscissae must be strictly increasing")
            t = t.copy()
            t.flags.writeable = False
            object.__setattr__(self, "table", t)
            if self.domain_hint is None:
                object.__setattr__(self, "domain_hint", (float(t[0, 0]), float(t[-1, 0])))
        elif self.kind == "custom":
            if self.fn is None:
                raise ValueError("custom activation needs a callable")
        elif self.kind not in BUILTINS:
            raise ValueError(f"unknown activation kind {self.kind!r}")

    @classmethod
    def builtin(cls, kind: str) -> "ActivationSpec":
        return cls(kind)

    @classmethod
    def from_table(cls, ys, values) -> "ActivationSpec":
        return cls("table", table=np.column_stack([ys, values]))

    @classmethod
    def from_callable(cls, fn: Callable, name: str = "custom") -> "ActivationSpec":
        return cls("custom", fn=fn, domain_hint=None)

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "table":
            return _interp_linear_extrapolate(y, self.table[:, 0], self.table[:, 1])
        if self.kind == "custom":
            return np.asarray(self.fn(y), dtype=float)
        return BUILTINS[self.kind](y)

    def to_dict(self) -> dict:
        if self.kind == "custom":
            raise ValueError("custom activations cannot be serialised")
        out = {"kind": self.kind}
        if self.kind == "table":
            out["table"] = self.table.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ActivationSpec":
        if data["kind"] == "table":
            return cls("table", table=np.asarray(data["table"], dtype=float))
        return cls(data["kind"])


def _interp_linear_extrapolate(y, xs, vs):
    """Piecewise linear through the samples, extended linearly past both ends."""
    out = np.interp(y, xs, vs)
    left = y < xs[0]
    right = y > xs[-1]
    if np.any(left):
        slope = (vs[1] - vs[0]) / (xs[1] - xs[0])
        out = np.where(left, vs[0] + slope * (y - xs[0]), out)
    if np.any(right):
        slope = (vs[-1] - vs[-2]) / (xs[-1] - xs[-2])
        out = np.where(right, vs[-1] + slope * (y - xs[-1]), out)
    return out
