"""Quadratic knapsack problems attacked with tensor-network annealing tools.

Subpackages: dense tensor algebra (:mod:`qkptn.tensor`), matrix product
states and operators (:mod:`qkptn.mps`), automaton rule tables
(:mod:`qkptn.automata`), problem encodings (:mod:`qkptn.encoding`), two-site
DMRG with gap scanning (:mod:`qkptn.dmrg`), dense annealing simulation and
schedules (:mod:`qkptn.annealsim`), classical solvers (:mod:`qkptn.solvers`)
and the command-line frontend (:mod:`qkptn.cli`).
"""

from .encoding import (
    IsingModel,
    QkpInstance,
    QuboProblem,
    SpinConvention,
    qkp_to_qubo,
    qubo_to_ising,
)
from .mps import Mpo, Mps

__all__ = [
    "IsingModel",
    "Mpo",
    "Mps",
    "QkpInstance",
    "QuboProblem",
    "SpinConvention",
    "qkp_to_qubo",
    "qubo_to_ising",
]

__version__ = "0.1.0"
