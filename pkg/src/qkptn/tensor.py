"""Dense tensor algebra: permutation, reshaping, contraction and truncated SVD.

Tensors are plain numpy arrays of complex128 in row-major layout. All
operations are pure; inputs are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ContractionMismatchError,
    InvalidArgumentError,
    InvalidPermutationError,
    InvalidReshapeError,
)

DTYPE = np.complex128


def as_tensor(data) -> np.ndarray:
    """Coerce array-like input to a complex128 ndarray."""
    return np.asarray(data, dtype=DTYPE)


def permute(t: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """Reorder the axes of ``t`` so that axis ``perm[i]`` becomes axis ``i``."""
    t = as_tensor(t)
    perm = tuple(perm)
    if len(perm) != t.ndim or sorted(perm) != list(range(t.ndim)):
        raise InvalidPermutationError(
            f"perm {perm} is not a permutation of 0..{t.ndim - 1}"
        )
    return np.ascontiguousarray(np.transpose(t, perm))


def reshape(t: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Merge consecutive axes of ``t`` into one axis per group.

    ``groups`` must partition 0..rank-1 contiguously and in order; the flat
    data is untouched, only the dims change.
    """
    t = as_tensor(t)
    flat = [ax for g in groups for ax in g]
    if flat != list(range(t.ndim)):
        raise InvalidReshapeError(
            f"groups {groups} do not partition axes 0..{t.ndim - 1} contiguously"
        )
    new_dims = tuple(int(np.prod([t.shape[ax] for ax in g], dtype=np.int64)) for g in groups)
    return t.reshape(new_dims)


def contract(
    a: np.ndarray, b: np.ndarray, pairs: Sequence[tuple[int, int]]
) -> np.ndarray:
    """Contract ``a`` with ``b`` over the given (axis-of-a, axis-of-b) pairs.

    Result axes are a's unpaired axes (in order) followed by b's. Implemented
    as permute -> reshape -> matrix multiply.
    """
    a = as_tensor(a)
    b = as_tensor(b)
    pairs = list(pairs)
    ax_a = [p[0] for p in pairs]
    ax_b = [p[1] for p in pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ContractionMismatchError("an axis appears in more than one pair")
    for i, j in pairs:
        if a.shape[i] != b.shape[j]:
            raise ContractionMismatchError(
                f"axis {i} of a (dim {a.shape[i]}) does not match "
                f"axis {j} of b (dim {b.shape[j]})"
            )
    open_a = [ax for ax in range(a.ndim) if ax not in ax_a]
    open_b = [ax for ax in range(b.ndim) if ax not in ax_b]
    am = np.transpose(a, open_a + ax_a).reshape(
        int(np.prod([a.shape[ax] for ax in open_a], dtype=np.int64)),
        int(np.prod([a.shape[ax] for ax in ax_a], dtype=np.int64)),
    )
    bm = np.transpose(b, ax_b + open_b).reshape(
        int(np.prod([b.shape[ax] for ax in ax_b], dtype=np.int64)),
        int(np.prod([b.shape[ax] for ax in open_b], dtype=np.int64)),
    )
    out = am @ bm
    return out.reshape(
        tuple(a.shape[ax] for ax in open_a) + tuple(b.shape[ax] for ax in open_b)
    )


@dataclass(frozen=True)
class SvdResult:
    """Truncated SVD of a tensor split into a left and right index group.

    ``u`` has orthonormal columns, ``v_dag`` orthonormal rows, ``s`` is the
    kept singular value spectrum sorted non-increasing. ``truncation_error``
    is the Frobenius norm of the discarded part.
    """

    u: np.ndarray
    s: np.ndarray
    v_dag: np.ndarray
    truncation_error: float
    kept: int


def svd_truncated(
    t: np.ndarray, split: int, chi_max: int, rel_tol: float = 1e-12
) -> SvdResult:
    """SVD of ``t`` viewed as a matrix with the first ``split`` axes as rows.

    Keeps at most ``chi_max`` singular values and drops those below
    ``rel_tol`` times the largest one. A zero matrix keeps a single zero
    singular value so downstream bond dimensions stay >= 1.
    """
    t = as_tensor(t)
    if not 1 <= split < t.ndim:
        raise InvalidArgumentError(f"split {split} out of range for rank {t.ndim}")
    if chi_max < 1:
        raise InvalidArgumentError("chi_max must be >= 1")
    m = reshape(t, [list(range(split)), list(range(split, t.ndim))])
    u, s, v_dag = np.linalg.svd(m, full_matrices=False)
    if s[0] == 0.0:
        return SvdResult(
            u=u[:, :1],
            s=np.zeros(1),
            v_dag=v_dag[:1, :],
            truncation_error=0.0,
            kept=1,
        )
    kept = min(chi_max, int(np.sum(s >= rel_tol * s[0])))
    kept = max(kept, 1)
    err = float(np.sqrt(np.sum(s[kept:] ** 2)))
    return SvdResult(
        u=u[:, :kept], s=s[:kept], v_dag=v_dag[:kept, :], truncation_error=err, kept=kept
    )
