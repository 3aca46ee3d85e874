"""Classical QKP machinery: generation, brute force, DP heuristic, comparison.

The DP pass stores, for each residual capacity, the best value found and the
item set realizing it. With pairwise profits the subproblem values interact,
so the recursion is a heuristic lower bound; it is exact when all pairwise
terms vanish (classical knapsack).
"""

from __future__ import annotations

import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .encoding import QkpInstance, evaluate_qkp
from .errors import InvalidArgumentError, ShapeError, SizeError

BRUTE_FORCE_CAP = 25


@dataclass
class SolveReport:
    solver: str
    bits: np.ndarray
    value: int
    weight: int
    feasible: bool
    wall_time: float
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "solver": self.solver,
                "bits": [int(b) for b in self.bits],
                "value": int(self.value),
                "weight": int(self.weight),
                "feasible": bool(self.feasible),
                "wall_time": self.wall_time,
                "extras": self.extras,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SolveReport":
        doc = json.loads(text)
        return cls(
            solver=doc["solver"], bits=np.asarray(doc["bits"], dtype=int),
            value=int(doc["value"]), weight=int(doc["weight"]),
            feasible=bool(doc["feasible"]), wall_time=float(doc["wall_time"]),
            extras=doc.get("extras", {}),
        )


def make_report(solver: str, inst: QkpInstance, bits, wall_time: float,
                extras: dict | None = None) -> SolveReport:
    value, weight, feasible = evaluate_qkp(inst, bits)
    return SolveReport(
        solver=solver, bits=np.asarray(bits, dtype=int), value=value, weight=weight,
        feasible=feasible, wall_time=wall_time, extras=extras or {},
    )


def gen_instance(
    n: int, capacity: int, value_max: int, weight_max: int,
    pair_density: float, seed: int,
) -> QkpInstance:
    """Random instance: uniform integer weights/values, Bernoulli pair terms."""
    if n < 1 or value_max < 1 or weight_max < 1:
        raise InvalidArgumentError("n and value/weight ranges must be >= 1")
    if not 0.0 <= pair_density <= 1.0:
        raise InvalidArgumentError("pair_density must be in [0, 1]")
    rng = np.random.default_rng(seed)
    weights = rng.integers(1, weight_max + 1, size=n)
    values = np.zeros((n, n), dtype=np.int64)
    np.fill_diagonal(values, rng.integers(1, value_max + 1, size=n))
    for i in range(n):
        for j in range(i):
            if rng.random() < pair_density:
                values[i, j] = rng.integers(1, value_max + 1)
    return QkpInstance(n=n, capacity=capacity, weights=weights, values=values)


def brute_force(inst: QkpInstance) -> SolveReport:
    """Exact optimum over all subsets; ties go to the lexicographically
    smallest bitstring with item 1 as the most significant position."""
    n = inst.n
    if n > BRUTE_FORCE_CAP:
        raise SizeError(f"brute force capped at n={BRUTE_FORCE_CAP}, got {n}")
    t0 = time.perf_counter()
    vl = np.tril(inst.values)
    shifts = n - 1 - np.arange(n)
    best_val, best_idx = -1, 0
    chunk = 1 << 20
    for start in range(0, 2**n, chunk):
        idx = np.arange(start, min(start + chunk, 2**n))
        # bit of item i (0-based) read from the top so index order is lex order
        b = ((idx[:, None] >> shifts) & 1).astype(np.int64)
        vals = np.einsum("ki,ij,kj->k", b, vl, b)
        vals = np.where(b @ inst.weights <= inst.capacity, vals, -1)
        k = int(np.argmax(vals))  # first occurrence, i.e. lex smallest
        if vals[k] > best_val:
            best_val, best_idx = int(vals[k]), start + k
    bits = (best_idx >> shifts) & 1
    return make_report("bf", inst, bits, time.perf_counter() - t0)


def dp_solve(inst: QkpInstance, debug_checks: bool = False) -> SolveReport:
    """Capacity-indexed DP heuristic, exact for pair-free instances.

    For each item k and residual capacity r (descending), the candidate is
    the set S(r - w_k) plus item k, valued with all pairwise bonuses against
    that set; improvements overwrite, ties keep the incumbent.
    """
    n, cap = inst.n, inst.capacity
    w = inst.weights
    vl = np.tril(inst.values)
    t0 = time.perf_counter()
    best_v = np.zeros(cap + 1, dtype=np.int64)
    sets: list[frozenset] = [frozenset() for _ in range(cap + 1)]
    for k in range(n):
        wk = int(w[k])
        for r in range(cap, wk - 1, -1):  # w_k <= r is the fit test
            src = sets[r - wk]
            if k in src:
                continue
            gain = vl[k, k] + sum(vl[max(i, k), min(i, k)] for i in src)
            cand = best_v[r - wk] + gain
            if cand > best_v[r]:
                best_v[r] = cand
                sets[r] = src | {k}
        if debug_checks:
            for r in range(cap + 1):
                if sum(int(w[i]) for i in sets[r]) > r:
                    raise InvalidArgumentError(f"DP set at capacity {r} overweight")
    bits = np.zeros(n, dtype=int)
    for i in sets[cap]:
        bits[i] = 1
    return make_report("dp", inst, bits, time.perf_counter() - t0)


@dataclass
class ComparisonTable:
    solvers: list[str]
    values: list[int]
    weights: list[int]
    feasible: list[bool]
    times: list[float]
    ratios: list[float] | None = None

    def to_csv(self) -> str:
        buf = io.StringIO()
        head = "solver,value,weight,feasible,wall_time"
        if self.ratios is not None:
            head += ",ratio"
        buf.write(head + "\n")
        for i, name in enumerate(self.solvers):
            row = (
                f"{name},{self.values[i]},{self.weights[i]},"
                f"{int(self.feasible[i])},{self.times[i]:.12g}"
            )
            if self.ratios is not None:
                row += f",{self.ratios[i]:.12g}"
            buf.write(row + "\n")
        return buf.getvalue()

    def to_text(self) -> str:
        cols = ["solver", "value", "weight", "feasible", "time_s"]
        if self.ratios is not None:
            cols.append("ratio")
        rows = []
        for i, name in enumerate(self.solvers):
            row = [
                name, str(self.values[i]), str(self.weights[i]),
                "yes" if self.feasible[i] else "NO",
                f"{self.times[i]:.4g}",
            ]
            if self.ratios is not None:
                row.append(f"{self.ratios[i]:.4f}")
            rows.append(row)
        widths = [max(len(c), *(len(r[j]) for r in rows)) for j, c in enumerate(cols)]
        lines = ["  ".join(c.ljust(widths[j]) for j, c in enumerate(cols))]
        for r in rows:
            lines.append("  ".join(v.ljust(widths[j]) for j, v in enumerate(r)))
        return "\n".join(lines) + "\n"


def compare(
    reports: list[SolveReport], reference: SolveReport | None = None
) -> ComparisonTable:
    """Tabulate reports of one instance; ratios are value / reference value."""
    if not reports:
        raise InvalidArgumentError("no reports to compare")
    lengths = {len(r.bits) for r in reports}
    if reference is not None:
        lengths.add(len(reference.bits))
    if len(lengths) != 1:
        raise ShapeError("reports describe different instances")
    ratios = None
    if reference is not None:
        if reference.value == 0:
            ratios = [1.0 if r.value == 0 else float("inf") for r in reports]
        else:
            ratios = [r.value / reference.value for r in reports]
    return ComparisonTable(
        solvers=[r.solver for r in reports],
        values=[r.value for r in reports],
        weights=[r.weight for r in reports],
        feasible=[r.feasible for r in reports],
        times=[r.wall_time for r in reports],
        ratios=ratios,
    )
