"""Matrix product states and operators with canonical forms and dense oracles.

MPS site tensors carry axes (left-bond, physical, right-bond); MPO site
tensors carry (left-bond, physical-out, physical-in, right-bond). Boundary
bonds have dimension 1. Values are treated as immutable: every operation
returns a new object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import tensor
from .errors import NormalizationError, ShapeError, SizeError

DENSE_CAP = 14

FORM_NONE = "none"
FORM_LEFT = "left"
FORM_RIGHT = "right"
FORM_MIXED = "mixed"

SERIAL_FORMAT_MPS = "qkptn-mps/1"
SERIAL_FORMAT_MPO = "qkptn-mpo/1"


@dataclass
class Mps:
    sites: list[np.ndarray]
    form: str = FORM_NONE
    center: int | None = None

    def __post_init__(self):
        for k, a in enumerate(self.sites):
            if a.ndim != 3:
                raise ShapeError(f"site {k} is rank {a.ndim}, expected 3")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[2] != 1:
            raise ShapeError("boundary bonds must have dimension 1")
        for k in range(len(self.sites) - 1):
            if self.sites[k].shape[2] != self.sites[k + 1].shape[0]:
                raise ShapeError(f"bond mismatch between sites {k} and {k + 1}")

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def phys_dims(self) -> list[int]:
        return [a.shape[1] for a in self.sites]

    def bond_dims(self) -> list[int]:
        """Internal bond dimensions, length n-1."""
        return [a.shape[2] for a in self.sites[:-1]]


@dataclass
class Mpo:
    sites: list[np.ndarray]

    def __post_init__(self):
        for k, a in enumerate(self.sites):
            if a.ndim != 4:
                raise ShapeError(f"site {k} is rank {a.ndim}, expected 4")
        if self.sites[0].shape[0] != 1 or self.sites[-1].shape[3] != 1:
            raise ShapeError("boundary bonds must have dimension 1")
        for k in range(len(self.sites) - 1):
            if self.sites[k].shape[3] != self.sites[k + 1].shape[0]:
                raise ShapeError(f"bond mismatch between sites {k} and {k + 1}")

    @property
    def n(self) -> int:
        return len(self.sites)

    def bond_dims(self) -> list[int]:
        return [a.shape[3] for a in self.sites[:-1]]


def random_mps(n: int, chi: int, seed: int) -> Mps:
    """Seeded random MPS with bond dims min(chi, 2^k, 2^(n-k)), unit norm."""
    if n < 1 or chi < 1:
        raise ShapeError("need n >= 1 and chi >= 1")
    rng = np.random.default_rng(seed)
    bonds = [1] + [min(chi, 2**k, 2 ** (n - k)) for k in range(1, n)] + [1]
    sites = []
    for k in range(n):
        shape = (bonds[k], 2, bonds[k + 1])
        sites.append(
            (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)).astype(
                tensor.DTYPE
            )
        )
    m = Mps(sites)
    nrm = np.sqrt(abs(inner(m, m)))
    m.sites[0] = m.sites[0] / nrm
    return m


def product_mps(bits) -> Mps:
    """Computational basis state |b1 ... bN> as a bond-dimension-1 MPS."""
    bits = list(bits)
    if not bits:
        raise ShapeError("bits must be non-empty")
    sites = []
    for b in bits:
        a = np.zeros((1, 2, 1), dtype=tensor.DTYPE)
        a[0, int(b), 0] = 1.0
        sites.append(a)
    return Mps(sites, form=FORM_RIGHT, center=0)


def inner(a: Mps, b: Mps) -> complex:
    """<a|b> by zipping the two chains site by site."""
    if a.n != b.n or a.phys_dims != b.phys_dims:
        raise ShapeError("MPS length or physical dimension mismatch")
    # env axes: (bra-bond, ket-bond)
    env = np.ones((1, 1), dtype=tensor.DTYPE)
    for ab, bb in zip(a.sites, b.sites):
        env = tensor.contract(env, np.conj(ab), [(0, 0)])  # (ket, phys, bra-r)
        env = tensor.contract(env, bb, [(0, 0), (1, 1)])  # (bra-r, ket-r)
    return complex(env[0, 0])


def _mpo_env_step(env: np.ndarray, bra: np.ndarray, w: np.ndarray, ket: np.ndarray):
    """Advance a (bra, mpo, ket) left environment by one site."""
    env = tensor.contract(env, np.conj(bra), [(0, 0)])  # (mpo, ket, phys*, bra-r)
    env = tensor.contract(env, w, [(0, 0), (2, 1)])  # (ket, bra-r, phys-in, mpo-r)
    env = tensor.contract(env, ket, [(0, 0), (2, 1)])  # (bra-r, mpo-r, ket-r)
    return env


def expectation(m: Mps, h: Mpo) -> float:
    """<psi|H|psi> / <psi|psi> for a Hermitian MPO."""
    if m.n != h.n:
        raise ShapeError("MPS and MPO length mismatch")
    env = np.ones((1, 1, 1), dtype=tensor.DTYPE)
    for a, w in zip(m.sites, h.sites):
        env = _mpo_env_step(env, a, w, a)
    val = complex(env[0, 0, 0]) / inner(m, m)
    return float(val.real)


def expectation_sq(m: Mps, h: Mpo) -> float:
    """<psi|H^2|psi> / <psi|psi> via a two-MPO sandwich, H^2 never formed."""
    if m.n != h.n:
        raise ShapeError("MPS and MPO length mismatch")
    # env axes: (bra, mpo-upper, mpo-lower, ket)
    env = np.ones((1, 1, 1, 1), dtype=tensor.DTYPE)
    for a, w in zip(m.sites, h.sites):
        env = tensor.contract(env, np.conj(a), [(0, 0)])  # (wu, wl, ket, p*, bra-r)
        env = tensor.contract(env, w, [(0, 0), (3, 1)])  # (wl, ket, bra-r, p-mid, wu-r)
        env = tensor.contract(env, w, [(0, 0), (3, 1)])  # (ket, bra-r, wu-r, p-in, wl-r)
        env = tensor.contract(env, a, [(0, 0), (3, 1)])  # (bra-r, wu-r, wl-r, ket-r)
    val = complex(env[0, 0, 0, 0]) / inner(m, m)
    return float(val.real)


def canonicalize(
    m: Mps, target_form: str = FORM_RIGHT, chi_max: int = 10**9, rel_tol: float = 1e-12
) -> Mps:
    """Return an equivalent MPS in the requested orthogonal form.

    ``target_form`` is "left", "right" or ("mixed", center). Bond dimensions
    are capped at chi_max via truncated SVD; without truncation the state is
    unchanged up to global normalization.
    """
    if isinstance(target_form, tuple):
        form, center = target_form
        if form != FORM_MIXED:
            raise ShapeError(f"unknown form {target_form}")
    else:
        form, center = target_form, None
    sites = [a.copy() for a in m.sites]
    n = len(sites)

    def sweep_left_ortho(stop, chi, tol):
        # left-orthogonalize sites 0..stop-1, absorbing remainders rightward
        for k in range(stop):
            r = tensor.svd_truncated(sites[k], 2, chi, tol)
            sites[k] = r.u.reshape(sites[k].shape[0], sites[k].shape[1], r.kept)
            rest = (r.s[:, None] * r.v_dag).astype(tensor.DTYPE)
            sites[k + 1] = tensor.contract(rest, sites[k + 1], [(1, 0)])

    def sweep_right_ortho(start, chi, tol):
        # right-orthogonalize sites n-1..start+1, absorbing remainders leftward
        for k in range(n - 1, start, -1):
            r = tensor.svd_truncated(sites[k], 1, chi, tol)
            sites[k] = r.v_dag.reshape(r.kept, sites[k].shape[1], sites[k].shape[2])
            rest = (r.u * r.s[None, :]).astype(tensor.DTYPE)
            sites[k - 1] = tensor.contract(sites[k - 1], rest, [(2, 0)])

    big = 10**9
    # truncation is only optimal in a canonical gauge, so orthogonalize
    # untruncated first and truncate on the way back
    sweep_left_ortho(n - 1, big, 0.0)
    sweep_right_ortho(0, chi_max, rel_tol)
    if form == FORM_RIGHT:
        return Mps(sites, form=FORM_RIGHT, center=0)
    if form == FORM_LEFT:
        sweep_left_ortho(n - 1, chi_max, rel_tol)
        return Mps(sites, form=FORM_LEFT, center=n - 1)
    if form == FORM_MIXED:
        if center is None or not 0 <= center < n:
            raise ShapeError(f"invalid mixed center {center}")
        sweep_left_ortho(center, chi_max, rel_tol)
        return Mps(sites, form=FORM_MIXED, center=center)
    raise ShapeError(f"unknown form {target_form}")


def entanglement_entropy(m: Mps, cut: int) -> float:
    """Von Neumann entropy -sum p ln p across bond ``cut`` (1 <= cut <= N-1).

    p are the squared Schmidt coefficients of the bipartition; the input must
    be normalized.
    """
    if not 1 <= cut <= m.n - 1:
        raise ShapeError(f"cut {cut} out of range for {m.n} sites")
    nrm = abs(inner(m, m))
    if abs(nrm - 1.0) > 1e-8:
        raise NormalizationError(f"state norm^2 = {nrm}, expected 1")
    c = canonicalize(m, (FORM_MIXED, cut - 1))
    r = tensor.svd_truncated(c.sites[cut - 1], 2, 10**9, rel_tol=0.0)
    p = r.s**2
    p = p[p > 1e-30]
    p = p / p.sum()
    return float(-np.sum(p * np.log(p)))


def mps_to_dense(m: Mps, cap: int = DENSE_CAP) -> np.ndarray:
    """Full contraction to a 2^N state vector (N <= cap)."""
    if m.n > cap:
        raise SizeError(f"N={m.n} exceeds dense cap {cap}")
    vec = m.sites[0]  # (1, d, D)
    for a in m.sites[1:]:
        vec = tensor.contract(vec, a, [(vec.ndim - 1, 0)])
    vec = vec.reshape(-1)
    return vec


def mpo_to_dense(h: Mpo, cap: int = DENSE_CAP) -> np.ndarray:
    """Full contraction to a 2^N x 2^N matrix (N <= cap)."""
    if h.n > cap:
        raise SizeError(f"N={h.n} exceeds dense cap {cap}")
    out = h.sites[0]  # (1, o, i, D)
    for w in h.sites[1:]:
        # out axes: (1, o1..ok, i1..ik, D); keep out/in axes grouped
        k = (out.ndim - 2) // 2
        out = tensor.contract(out, w, [(out.ndim - 1, 0)])
        # now (1, o1..ok, i1..ik, o_new, i_new, D'); reorder outs then ins
        perm = (
            [0]
            + list(range(1, 1 + k))
            + [1 + 2 * k]
            + list(range(1 + k, 1 + 2 * k))
            + [2 + 2 * k, 3 + 2 * k]
        )
        out = tensor.permute(out, perm)
    k = (out.ndim - 2) // 2
    dim = int(np.prod([out.shape[ax] for ax in range(1, 1 + k)], dtype=np.int64))
    return out.reshape(dim, dim)


def assert_form(m: Mps, tol: float = 1e-10) -> None:
    """Check the orthogonality identities implied by the form tag."""
    if m.form == FORM_NONE:
        return
    if m.form in (FORM_LEFT, FORM_MIXED):
        hi = m.n - 1 if m.form == FORM_LEFT else m.center
        for k in range(hi):
            a = m.sites[k]
            g = tensor.contract(np.conj(a), a, [(0, 0), (1, 1)])
            if not np.allclose(g, np.eye(g.shape[0]), atol=tol):
                raise ShapeError(f"site {k} not left-orthogonal")
    if m.form in (FORM_RIGHT, FORM_MIXED):
        lo = 1 if m.form == FORM_RIGHT else m.center + 1
        for k in range(lo, m.n):
            a = m.sites[k]
            g = tensor.contract(a, np.conj(a), [(1, 1), (2, 2)])
            if not np.allclose(g, np.eye(g.shape[0]), atol=tol):
                raise ShapeError(f"site {k} not right-orthogonal")


def _sites_to_json(sites):
    return [
        {"dims": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}
        for a in sites
    ]


def _sites_from_json(entries, rank):
    sites = []
    for e in entries:
        a = np.asarray(e["re"], dtype=float) + 1j * np.asarray(e["im"], dtype=float)
        a = a.reshape(e["dims"]).astype(tensor.DTYPE)
        if a.ndim != rank:
            raise ShapeError(f"serialized site has rank {a.ndim}, expected {rank}")
        sites.append(a)
    return sites


def dump_mps(m: Mps) -> str:
    return json.dumps(
        {"format": SERIAL_FORMAT_MPS, "form": m.form, "center": m.center,
         "sites": _sites_to_json(m.sites)}
    )


def load_mps(text: str) -> Mps:
    doc = json.loads(text)
    if doc.get("format") != SERIAL_FORMAT_MPS:
        raise ShapeError(f"unexpected format tag {doc.get('format')!r}")
    return Mps(_sites_from_json(doc["sites"], 3), form=doc["form"], center=doc["center"])


def dump_mpo(h: Mpo) -> str:
    return json.dumps({"format": SERIAL_FORMAT_MPO, "sites": _sites_to_json(h.sites)})


def load_mpo(text: str) -> Mpo:
    doc = json.loads(text)
    if doc.get("format") != SERIAL_FORMAT_MPO:
        raise ShapeError(f"unexpected format tag {doc.get('format')!r}")
    return Mpo(_sites_from_json(doc["sites"], 4))
