"""Dense small-N tooling: exact spectra, state-vector annealing, schedules, SA.

Everything here works on full 2^N vectors, so the size caps are hard errors.
Qubit 1 is the most significant bit of the basis index, matching the dense
contraction order of the MPS/MPO side.
"""

from __future__ import annotations

import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dmrg import GapScanResult
from .encoding import IsingModel, QuboProblem
from .errors import (
    HermiticityError,
    InsufficientDataError,
    InvalidArgumentError,
    SizeError,
)

DENSE_CAP = 14
EVOLVE_CAP = 12


@dataclass
class Schedule:
    """Monotone interpolation profile s(t~) on normalized time in [0, 1]."""

    knots: np.ndarray
    description: str = "linear"
    epsilon: float | None = None
    degree: int | None = None

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        if self.knots.ndim != 2 or self.knots.shape[1] != 2 or self.knots.shape[0] < 2:
            raise InvalidArgumentError("knots must be an (m, 2) array with m >= 2")
        if self.knots[0, 1] != 0.0 or self.knots[-1, 1] != 1.0:
            raise InvalidArgumentError("schedule must satisfy s(0)=0 and s(1)=1")
        if np.any(np.diff(self.knots[:, 1]) < 0) or np.any(np.diff(self.knots[:, 0]) <= 0):
            raise InvalidArgumentError("schedule knots must be monotone")

    @classmethod
    def linear(cls) -> "Schedule":
        return cls(knots=np.array([[0.0, 0.0], [1.0, 1.0]]), description="linear")

    def value(self, t_norm: float) -> float:
        return float(np.interp(t_norm, self.knots[:, 0], self.knots[:, 1]))

    def to_json(self) -> str:
        return json.dumps(
            {
                "type": self.description,
                "epsilon": self.epsilon,
                "degree": self.degree,
                "knots": [[float(t), float(s)] for t, s in self.knots],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        doc = json.loads(text)
        return cls(
            knots=np.asarray(doc["knots"], dtype=float),
            description=doc.get("type", "linear"),
            epsilon=doc.get("epsilon"),
            degree=doc.get("degree"),
        )


@dataclass
class EvolutionTrace:
    times: np.ndarray
    s_values: np.ndarray
    energies: np.ndarray
    overlaps: np.ndarray
    final_state: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,s,energy,overlap\n")
        for t, s, e, o in zip(self.times, self.s_values, self.energies, self.overlaps):
            buf.write(f"{t:.12g},{s:.12g},{e:.12g},{o:.12g}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class SaParams:
    reads: int = 20
    sweeps: int = 100
    beta_min: float = 0.1
    beta_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.reads < 1 or self.sweeps < 1:
            raise InvalidArgumentError("reads and sweeps must be >= 1")
        if not self.beta_min < self.beta_max:
            raise InvalidArgumentError("need beta_min < beta_max")


def _spin_columns(n: int) -> np.ndarray:
    """(2^n, n) array of +/-1 spin values, qubit 1 in column 0 as the MSB."""
    idx = np.arange(2**n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    return 1 - 2 * bits  # bit 0 -> spin +1


def dense_hamiltonian(ising: IsingModel, s: float) -> np.ndarray:
    """-(1-s) sum X_i + s (sum h_i Z_i + sum J_ij Z_i Z_j), offset excluded."""
    n = ising.n
    if n > DENSE_CAP:
        raise SizeError(f"dense Hamiltonian capped at N={DENSE_CAP}, got {n}")
    dim = 2**n
    spins = _spin_columns(n)
    diag = spins @ (s * ising.h)
    for (i, jx), v in ising.j.items():
        diag += s * v * spins[:, i - 1] * spins[:, jx - 1]
    h = np.diag(diag.astype(complex))
    idx = np.arange(dim)
    for i in range(n):
        h[idx, idx ^ (1 << (n - 1 - i))] += -(1 - s)
    return h


def exact_spectrum(h_dense: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """k lowest eigenpairs, eigenvalues ascending, eigenvectors as columns."""
    h = np.asarray(h_dense)
    if k < 1:
        raise InvalidArgumentError("k must be >= 1")
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise HermiticityError("input must be square")
    if np.max(np.abs(h - h.conj().T)) > 1e-10:
        raise HermiticityError("matrix deviates from Hermitian beyond 1e-10")
    evals, evecs = np.linalg.eigh(h)
    return evals[:k], evecs[:, :k]


def evolve(
    ising: IsingModel, schedule: Schedule, total_time: float, steps: int
) -> EvolutionTrace:
    """Piecewise-constant annealing evolution from the uniform superposition.

    Each step applies exp(-i H(s(t_k)) dt) via a fresh eigendecomposition, so
    propagation is exactly unitary. The recorded overlap projects onto the
    full near-degenerate ground eigenspace of the instantaneous Hamiltonian.
    """
    n = ising.n
    if n > EVOLVE_CAP:
        raise SizeError(f"evolution capped at N={EVOLVE_CAP}, got {n}")
    if steps < 1:
        raise InvalidArgumentError("steps must be >= 1")
    dim = 2**n
    psi = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    dt = total_time / steps
    times = [0.0]
    s0 = schedule.value(0.0)
    s_values = [s0]

    def observe(s_now, state):
        h = dense_hamiltonian(ising, s_now)
        energy = float(np.real(np.vdot(state, h @ state)))
        evals, evecs = np.linalg.eigh(h)
        tol = 1e-9 * max(1.0, float(np.abs(evals).max()))
        gs = evecs[:, evals <= evals[0] + tol]
        overlap = float(np.sum(np.abs(gs.conj().T @ state) ** 2))
        return energy, overlap, evals, evecs

    e, o, _, _ = observe(s0, psi)
    energies, overlaps = [e], [o]
    for k in range(steps):
        t = k * dt
        s_now = schedule.value(t / total_time) if total_time > 0 else s0
        h = dense_hamiltonian(ising, s_now)
        evals, evecs = np.linalg.eigh(h)
        psi = evecs @ (np.exp(-1j * evals * dt) * (evecs.conj().T @ psi))
        t_next = (k + 1) * dt
        s_next = schedule.value(t_next / total_time) if total_time > 0 else s0
        e, o, _, _ = observe(s_next, psi)
        times.append(t_next)
        s_values.append(s_next)
        energies.append(e)
        overlaps.append(o)
    return EvolutionTrace(
        times=np.array(times), s_values=np.array(s_values),
        energies=np.array(energies), overlaps=np.array(overlaps), final_state=psi,
    )


def build_schedule(
    gaps: GapScanResult, epsilon: float | None = None, degree: int = 6
) -> Schedule:
    """Gap-derived schedule: integrate a fitted, clamped velocity profile.

    Velocity v(t~) = (g(t~) - g_min + eps)/(g_max - g_min) is least-squares
    fitted with a polynomial, evaluated on a 1001-point grid, clamped below
    at eps/(g_max - g_min) so it stays positive, integrated by the trapezoid
    rule and affinely rescaled to s(0)=0, s(1)=1.
    """
    g = np.asarray(gaps.gaps, dtype=float)
    t_knots = np.asarray(gaps.s_grid, dtype=float)
    if g.size < 2:
        raise InsufficientDataError("need at least 2 gap points")
    g_min, g_max = float(g.min()), float(g.max())
    spread = g_max - g_min
    grid = np.linspace(0.0, 1.0, 1001)
    if spread == 0.0:
        knots = np.column_stack([grid, grid])
        return Schedule(knots=knots, description="gap-derived", epsilon=epsilon,
                        degree=degree)
    if epsilon is None:
        epsilon = max(0.01 * spread, 1e-9)
    if epsilon <= 0:
        raise InvalidArgumentError("epsilon must be positive")
    v_knots = (g - g_min + epsilon) / spread
    deg = min(degree, g.size - 1)
    coeffs = np.polyfit(t_knots, v_knots, deg)
    v = np.polyval(coeffs, grid)
    v = np.clip(v, epsilon / spread, None)
    dt = grid[1] - grid[0]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * dt)))
    s_vals = cum / cum[-1]
    s_vals[0] = 0.0
    s_vals[-1] = 1.0
    return Schedule(
        knots=np.column_stack([grid, s_vals]), description="gap-derived",
        epsilon=float(epsilon), degree=deg,
    )


def _sa_read(args):
    d, c, offset, n, betas, seed = args
    rng = np.random.default_rng(seed)
    x = rng.integers(0, 2, size=n).astype(float)
    fields = c @ x + d
    energy = float(d @ x + 0.5 * x @ c @ x)
    best_x = x.copy()
    best_e = energy
    for beta in betas:
        order = rng.permutation(n)
        accept_u = rng.random(n)
        for pos, k in enumerate(order):
            delta = (1.0 - 2.0 * x[k]) * fields[k]
            if delta <= 0.0 or accept_u[pos] < np.exp(-beta * delta):
                step = 1.0 - 2.0 * x[k]
                x[k] += step
                fields += step * c[:, k]
                energy += delta
                if energy < best_e - 1e-12:
                    best_e = energy
                    best_x = x.copy()
    return best_x.astype(int), best_e + offset


def classical_sa(
    q: QuboProblem, params: SaParams, workers: int = 1
) -> tuple[np.ndarray, float]:
    """Metropolis single-flip QUBO sampler with a geometric beta ladder.

    The ladder spans [beta_min, beta_max] divided by the largest |Q| entry,
    one sweep per rung. Reads are independent with derived seeds; the best
    read wins, ties broken by lowest read index. The returned energy is the
    exact re-evaluation of the returned bitstring.
    """
    n = q.n
    d = np.diag(q.q).astype(float)
    c = np.tril(q.q, -1)
    c = c + c.T
    scale = float(np.max(np.abs(q.q))) if np.any(q.q != 0) else 1.0
    betas = np.geomspace(params.beta_min, params.beta_max, params.sweeps) / scale
    seeds = np.random.SeedSequence(params.seed).spawn(params.reads)
    jobs = [(d, c, q.offset, n, betas, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sa_read, jobs))
    else:
        results = [_sa_read(j) for j in jobs]
    best_bits, _ = min(enumerate(results), key=lambda r: (r[1][1], r[0]))[1]
    return np.asarray(best_bits, dtype=int), q.energy(best_bits)
