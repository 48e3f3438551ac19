"""Single-hidden-layer networks: evaluation, output-bias elimination, JSON I/O.

Biases live in row 0 of both weight matrices, matching the (1, x) convention:
unit j computes sigma(W1[0, j] + W1[1:, j] . x) and output t is
W2[0, t] + sum_j W2[j + 1, t] * unit_j.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .activations import ActivationSpec

FORMAT_VERSION = 1


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class NetworkWeights:
    W1: np.ndarray = field(repr=False)  # (n+1, N)
    W2: np.ndarray = field(repr=False)  # (N+1, m)
    sigma_kind: str = "tanh"

    def __post_init__(self):
        W1 = np.array(self.W1, dtype=float, ndmin=2)
        W2 = np.array(self.W2, dtype=float, ndmin=2)
        if W1.shape[0] < 2:
            raise ValueError("W1 needs a bias row and at least one input row")
        if W2.shape[0] != W1.shape[1] + 1:
            raise ValueError(f"W2 must have {W1.shape[1] + 1} rows, got {W2.shape[0]}")
        W1.flags.writeable = False
        W2.flags.writeable = False
        object.__setattr__(self, "W1", W1)
        object.__setattr__(self, "W2", W2)

    @property
    def n(self) -> int:
        return self.W1.shape[0] - 1

    @property
    def N(self) -> int:
        return self.W1.shape[1]

    @property
    def m(self) -> int:
        return self.W2.shape[1]

    def direction(self, j: int) -> np.ndarray:
        """Non-bias first-layer weights of unit j."""
        return self.W1[1:, j].copy()

    @property
    def directions(self) -> np.ndarray:
        """(N, n) array of non-bias first-layer weights."""
        return self.W1[1:].T.copy()

    @property
    def output_biases(self) -> np.ndarray:
        return self.W2[0].copy()

    @property
    def max_output_weight(self) -> float:
        return float(np.max(np.abs(self.W2[1:]))) if self.N else 0.0

    @property
    def min_input_norm(self) -> float:
        return float(np.min(np.linalg.norm(self.W1[1:], axis=0))) if self.N else math.inf


def forward(W: NetworkWeights, sigma: ActivationSpec, x, compensated: bool = False) -> np.ndarray:
    """Network output for one point (m-vector) or a batch of shape (P, n) -> (P, m)."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim <= 1
    if single:
        arr = arr.reshape(1, -1)
    if arr.shape[1] != W.n:
        raise ValueError(f"input dimension {arr.shape[1]} does not match network dimension {W.n}")
    H = sigma(W.W1[0] + arr @ W.W1[1:])
    if compensated:
        out = np.empty((arr.shape[0], W.m))
        for p in range(arr.shape[0]):
            for t in range(W.m):
                out[p, t] = math.fsum([W.W2[0, t], *(H[p] * W.W2[1:, t])])
    else:
        out = W.W2[0] + H @ W.W2[1:]
    return out[0] if single else out


def hidden_activations(W: NetworkWeights, sigma: ActivationSpec, x) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(x, dtype=float))
    return sigma(W.W1[0] + arr @ W.W1[1:])


def eliminate_output_bias(W: NetworkWeights, sigma: ActivationSpec, y0: float) -> NetworkWeights:
    """Fold the output biases into one extra constant unit sigma(y0)."""
    s = float(sigma(np.array([y0]))[0])
    if abs(s) <= 1e-12:
        raise ValueError(f"sigma({y0}) = {s} is too close to zero")
    col = np.zeros((W.n + 1, 1))
    col[0, 0] = y0
    W1 = np.hstack([W.W1, col])
    W2 = np.vstack([np.zeros((1, W.m)), W.W2[1:], (W.W2[0] / s).reshape(1, -1)])
    return NetworkWeights(W1, W2, W.sigma_kind)


def to_json(W: NetworkWeights, sigma: ActivationSpec | None = None, meta: dict | None = None) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "n": W.n,
        "m": W.m,
        "N": W.N,
        "sigma_kind": W.sigma_kind,
        "W1": W.W1.tolist(),
        "W2": W.W2.tolist(),
    }
    if sigma is not None and sigma.kind == "table":
        doc["sigma_table"] = sigma.table.tolist()
    if meta:
        doc["meta"] = meta
    return json.dumps(doc, indent=1)


def from_json(text: str) -> tuple[NetworkWeights, ActivationSpec | None, dict]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"network file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported network format version {doc.get('version') if isinstance(doc, dict) else None}")
    try:
        W = NetworkWeights(np.array(doc["W1"], dtype=float), np.array(doc["W2"], dtype=float),
                           doc["sigma_kind"])
    except (KeyError, ValueError) as exc:
        raise FormatError(f"malformed network file: {exc}") from exc
    if (W.n, W.m, W.N) != (doc["n"], doc["m"], doc["N"]):
        raise FormatError("declared shape does not match the weight matrices")
    sigma = None
    if doc["sigma_kind"] == "table" and "sigma_table" in doc:
        sigma = ActivationSpec("table", table=np.array(doc["sigma_table"], dtype=float))
    elif doc["sigma_kind"] not in ("table", "custom"):
        sigma = ActivationSpec(doc["sigma_kind"])
    return W, sigma, doc.get("meta", {})
