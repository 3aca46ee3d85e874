"""Compile finite-automaton rule tables into MPOs and MPSs.

A rule table describes one site matrix of a matrix product: each rule places
``coeff * op`` at a (left, right) position, read like an automaton transition.
Negative indices -1/-2 address the last and second-last index and are
resolved when the table is constructed. The annealing-Hamiltonian tables for
the transverse-field Ising interpolation live here too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .encoding import IsingModel
from .errors import DuplicateRuleError, ShapeError, TableChainError
from .mps import Mpo, Mps

PAULI = {
    "I": np.eye(2, dtype=tensor.DTYPE),
    "X": np.array([[0, 1], [1, 0]], dtype=tensor.DTYPE),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=tensor.DTYPE),
    "Z": np.array([[1, 0], [0, -1]], dtype=tensor.DTYPE),
}

KET0 = np.array([1, 0], dtype=tensor.DTYPE)
KET1 = np.array([0, 1], dtype=tensor.DTYPE)


@dataclass(frozen=True)
class Rule:
    left: int
    right: int
    op: np.ndarray
    coeff: complex = 1.0 + 0j


def _resolve(idx: int, dim: int) -> int:
    if idx in (-1, -2):
        idx = dim + 1 + idx
    if not 1 <= idx <= dim:
        raise ShapeError(f"rule index {idx} out of range 1..{dim}")
    return idx


@dataclass
class RuleTable:
    left_dim: int
    right_dim: int
    rules: list[Rule] = field(default_factory=list)

    def __post_init__(self):
        resolved = []
        seen = set()
        for r in self.rules:
            lt = _resolve(r.left, self.left_dim)
            rt = _resolve(r.right, self.right_dim)
            if (lt, rt) in seen:
                raise DuplicateRuleError(f"duplicate rule at cell ({lt}, {rt})")
            seen.add((lt, rt))
            resolved.append(Rule(lt, rt, np.asarray(r.op, dtype=tensor.DTYPE), complex(r.coeff)))
        self.rules = resolved


def _check_chain(tables: list[RuleTable]) -> None:
    if not tables:
        raise TableChainError("empty table list")
    for k in range(len(tables) - 1):
        if tables[k].right_dim != tables[k + 1].left_dim:
            raise TableChainError(
                f"right_dim {tables[k].right_dim} of table {k} does not match "
                f"left_dim {tables[k + 1].left_dim} of table {k + 1}"
            )


def mpo_from_tables(tables: list[RuleTable]) -> Mpo:
    """Build an MPO whose site k holds coeff*op at each rule's cell.

    The first table contributes only its first row and the last only its last
    column, so boundary bonds end up with dimension 1.
    """
    _check_chain(tables)
    sites = []
    for k, tb in enumerate(tables):
        a = np.zeros((tb.left_dim, 2, 2, tb.right_dim), dtype=tensor.DTYPE)
        for r in tb.rules:
            if r.op.shape != (2, 2):
                raise ShapeError("MPO rules need 2x2 operators")
            a[r.left - 1, :, :, r.right - 1] += r.coeff * r.op
        if k == 0:
            a = a[:1]
        if k == len(tables) - 1:
            a = a[..., -1:]
        sites.append(a)
    return Mpo(sites)


def mps_from_tables(tables: list[RuleTable]) -> Mps:
    """Like :func:`mpo_from_tables` with basis kets instead of operators."""
    _check_chain(tables)
    sites = []
    for k, tb in enumerate(tables):
        a = np.zeros((tb.left_dim, 2, tb.right_dim), dtype=tensor.DTYPE)
        for r in tb.rules:
            if r.op.shape != (2,):
                raise ShapeError("MPS rules need length-2 kets")
            a[r.left - 1, :, r.right - 1] += r.coeff * r.op
        if k == 0:
            a = a[:1]
        if k == len(tables) - 1:
            a = a[..., -1:]
        sites.append(a)
    return Mps(sites)


def annealing_tables(ising: IsingModel, s: float) -> list[RuleTable]:
    """Rule tables for H(s) = -(1-s) sum X + s (sum h Z + sum J ZZ), N >= 2.

    Interior bond dimensions follow min(k+2, N-k+3); the middle site's right
    dimension uses a = 2 for even N and a = 3 for odd N.
    """
    n = ising.n
    if n < 2:
        raise ShapeError("tables are defined for N >= 2")
    mid = n // 2
    a_par = 2 if n % 2 == 0 else 3
    i2, x, z = PAULI["I"], PAULI["X"], PAULI["Z"]

    def jget(i, j):
        return ising.j.get((i, j), 0.0)

    tables = []
    for k in range(1, n + 1):
        if k < mid:
            ld, rd = k + 2, k + 3
        elif k == mid:
            ld, rd = mid + 2, mid + a_par
        else:
            ld, rd = n - k + 3, n - k + 2
        rules = [
            Rule(1, 1, i2),
            Rule(-1, -1, i2),
            Rule(-2, -1, z),
            Rule(1, -1, -(1 - s) * x + s * ising.h[k - 1] * z),
        ]
        if k < mid:
            rules.append(Rule(1, 2, z))
            rules.append(Rule(1, k + 2, z, coeff=s * jget(k, k + 1)))
            for m in range(2, k + 1):
                rules.append(Rule(m, m + 1, i2))
                rules.append(Rule(m, k + 2, i2, coeff=s * jget(k - m + 1, k + 1)))
        elif k == mid:
            for nn in range(2, mid + a_par):
                rules.append(Rule(1, nn, z, coeff=s * jget(mid, n - nn + 2)))
                for m in range(2, k + 1):
                    rules.append(Rule(m, nn, i2, coeff=s * jget(mid - m + 1, n - nn + 2)))
        else:
            for m in range(2, n - k + 2):
                rules.append(Rule(1, m, z, coeff=s * jget(k, n - m + 2)))
                rules.append(Rule(m, m, i2))
        tables.append(RuleTable(ld, rd, rules))
    return tables


def annealing_mpo(ising: IsingModel, s: float) -> Mpo:
    """MPO of the annealing Hamiltonian at interpolation parameter s.

    The constant Ising offset is never embedded; callers add it to energies.
    """
    if not 0.0 <= s <= 1.0:
        raise ShapeError(f"s = {s} outside [0, 1]")
    if ising.n == 1:
        block = -(1 - s) * PAULI["X"] + s * ising.h[0] * PAULI["Z"]
        return Mpo([block.reshape(1, 2, 2, 1)])
    return mpo_from_tables(annealing_tables(ising, s))


def _op_from_json(spec):
    if isinstance(spec, str):
        try:
            return PAULI[spec]
        except KeyError:
            raise ShapeError(f"unknown operator name {spec!r}") from None
    arr = np.asarray(spec, dtype=float)
    if arr.ndim == 3 and arr.shape[-1] == 2:  # entries as [re, im]
        return (arr[..., 0] + 1j * arr[..., 1]).astype(tensor.DTYPE)
    return np.asarray(spec, dtype=tensor.DTYPE)


def load_tables(text: str) -> list[RuleTable]:
    """Parse the JSON rule-table document used by the CLI.

    Schema: {"sites": [{"left_dim", "right_dim",
    "rules": [{"left", "right", "op": name-or-matrix, "coeff"}]}]}.
    """
    doc = json.loads(text)
    tables = []
    for site in doc["sites"]:
        rules = [
            Rule(
                int(r["left"]),
                int(r["right"]),
                _op_from_json(r["op"]),
                complex(r.get("coeff", 1.0)),
            )
            for r in site["rules"]
        ]
        tables.append(RuleTable(int(site["left_dim"]), int(site["right_dim"]), rules))
    return tables
