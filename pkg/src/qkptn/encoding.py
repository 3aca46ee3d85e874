"""Quadratic knapsack -> QUBO -> Ising encoding with unbalanced penalization.

The inequality constraint (total weight <= capacity) enters the QUBO cost as
a fitted quadratic surrogate of an exponential penalty, so no slack variables
are introduced. Spin conversions support both sign conventions of the binary
to +/-1 variable change.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError

PENALTY_LINEAR = -0.9603
PENALTY_QUADRATIC = 0.0371


class SpinConvention(enum.Enum):
    """Map between binary x and spin s: x = (1 -/+ s)/2."""

    MINUS_HALF = "minus_half"  # x = (1 - s)/2, x=1 <-> s=-1
    PLUS_HALF = "plus_half"  # x = (1 + s)/2, x=1 <-> s=+1


@dataclass(frozen=True)
class QkpInstance:
    """Knapsack data: weights, capacity and triangular profit matrix.

    ``values`` is lower triangular; the diagonal holds item values and entry
    (i, j) with i > j the bonus for selecting items i and j together.
    """

    n: int
    capacity: int
    weights: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.int64))
        if self.weights.shape != (self.n,) or self.values.shape != (self.n, self.n):
            raise ShapeError("weights must be (n,), values must be (n, n)")
        if np.any(self.weights < 1):
            raise ShapeError("weights must all be >= 1")
        if np.any(np.triu(self.values, 1) != 0):
            raise ShapeError("values must be lower triangular")

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n,
                "capacity": int(self.capacity),
                "weights": self.weights.tolist(),
                "values": [row[: i + 1].tolist() for i, row in enumerate(self.values)],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "QkpInstance":
        doc = json.loads(text)
        n = int(doc["n"])
        values = np.zeros((n, n), dtype=np.int64)
        for i, row in enumerate(doc["values"]):
            if len(row) > i + 1:
                raise ShapeError(f"values row {i} has {len(row)} entries, expected <= {i + 1}")
            values[i, : len(row)] = row
        return cls(n=n, capacity=int(doc["capacity"]), weights=doc["weights"], values=values)


@dataclass(frozen=True)
class QuboProblem:
    """min x^T Q x + offset over binary x, with Q lower triangular."""

    q: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        if self.q.ndim != 2 or self.q.shape[0] != self.q.shape[1]:
            raise ShapeError("Q must be square")
        if np.any(np.triu(self.q, 1) != 0):
            raise ShapeError("Q must be lower triangular")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def energy(self, bits) -> float:
        x = np.asarray(bits, dtype=float)
        return float(x @ self.q @ x + self.offset)

    def to_json(self) -> str:
        return json.dumps({"q": self.q.tolist(), "offset": self.offset})


@dataclass(frozen=True)
class IsingModel:
    """H_p = sum h_i Z_i + sum_{i<j} J_ij Z_i Z_j + offset (1-based keys)."""

    n: int
    h: np.ndarray
    j: dict = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h", np.asarray(self.h, dtype=float))
        if self.h.shape != (self.n,):
            raise ShapeError("h must have length n")
        for (i, jx), v in self.j.items():
            if not (1 <= i < jx <= self.n):
                raise ShapeError(f"coupling key ({i}, {jx}) must satisfy 1 <= i < j <= n")
            if not np.isfinite(v):
                raise ShapeError(f"coupling ({i}, {jx}) is not finite")

    def energy(self, spins) -> float:
        s = np.asarray(spins, dtype=float)
        e = float(self.h @ s) + self.offset
        for (i, jx), v in self.j.items():
            e += v * s[i - 1] * s[jx - 1]
        return e

    def to_json(self, convention: SpinConvention | None = None) -> str:
        doc = {
            "n": self.n,
            "h": self.h.tolist(),
            "j": [[i, jx, v] for (i, jx), v in sorted(self.j.items())],
            "offset": self.offset,
        }
        if convention is not None:
            doc["convention"] = convention.value
        return json.dumps(doc)


def penalty_g(h_val: float) -> float:
    """Fitted quadratic penalty surrogate: -0.9603 h + 0.0371 h^2."""
    return PENALTY_LINEAR * h_val + PENALTY_QUADRATIC * h_val * h_val


def qkp_to_qubo(inst: QkpInstance, lam: float = 5.0) -> QuboProblem:
    """Encode cost = -V(x) + lam * penalty_g(W - w.x) as a triangular QUBO.

    The x-independent part lam * penalty_g(W) goes into the offset.
    """
    if lam <= 0:
        raise ShapeError("lambda must be positive")
    n, w, cap = inst.n, inst.weights.astype(float), float(inst.capacity)
    q = np.zeros((n, n))
    # profit part: -sum_{i>=j} v_ij x_i x_j
    q -= np.tril(inst.values).astype(float)
    # penalty part, expanded with x_i^2 = x_i:
    # g(W - w.x) = g(W) + (0.9603 - 2*0.0371*W) w.x + 0.0371 (w.x)^2
    lin = -PENALTY_LINEAR - 2.0 * PENALTY_QUADRATIC * cap
    for i in range(n):
        q[i, i] += lam * (lin * w[i] + PENALTY_QUADRATIC * w[i] * w[i])
        for jx in range(i):
            q[i, jx] += lam * 2.0 * PENALTY_QUADRATIC * w[i] * w[jx]
    return QuboProblem(q=q, offset=lam * penalty_g(cap))


def qubo_to_ising(
    q: QuboProblem, conv: SpinConvention = SpinConvention.MINUS_HALF
) -> IsingModel:
    """Substitute x = (1 -/+ s)/2 into x^T Q x + offset and expand (s^2 = 1)."""
    n = q.n
    sign = -1.0 if conv is SpinConvention.MINUS_HALF else 1.0
    h = np.zeros(n)
    j: dict = {}
    offset = q.offset
    for i in range(n):
        # q_ii x_i = q_ii (1 + sign*s_i)/2
        h[i] += sign * q.q[i, i] / 2.0
        offset += q.q[i, i] / 2.0
    for i in range(n):
        for jx in range(i):
            c = q.q[i, jx]
            if c == 0.0:
                continue
            # c x_i x_j = c (1 + sign*s_i + sign*s_j + s_i s_j)/4
            h[i] += sign * c / 4.0
            h[jx] += sign * c / 4.0
            key = (jx + 1, i + 1)
            j[key] = j.get(key, 0.0) + c / 4.0
            offset += c / 4.0
    j = {k: v for k, v in j.items() if v != 0.0}
    return IsingModel(n=n, h=h, j=j, offset=offset)


def encode_spins(bits, conv: SpinConvention = SpinConvention.MINUS_HALF) -> np.ndarray:
    """Binary bits -> +/-1 spins under the chosen convention."""
    x = np.asarray(bits, dtype=int)
    sign = -1 if conv is SpinConvention.MINUS_HALF else 1
    return sign * (2 * x - 1)


def decode_spins(spins, conv: SpinConvention = SpinConvention.MINUS_HALF) -> np.ndarray:
    """+/-1 spins -> binary bits; exact inverse of :func:`encode_spins`."""
    s = np.asarray(spins, dtype=int)
    if np.any(np.abs(s) != 1):
        raise ShapeError("spins must be +/-1")
    if conv is SpinConvention.MINUS_HALF:
        return ((1 - s) // 2).astype(int)
    return ((1 + s) // 2).astype(int)


def evaluate_qkp(inst: QkpInstance, bits) -> tuple[int, int, bool]:
    """Return (value, weight, feasible) for a selection bitstring."""
    b = np.asarray(bits, dtype=np.int64)
    if b.shape != (inst.n,):
        raise ShapeError(f"expected {inst.n} bits, got shape {b.shape}")
    value = int(b @ np.tril(inst.values) @ b)
    weight = int(inst.weights @ b)
    return value, weight, weight <= inst.capacity
