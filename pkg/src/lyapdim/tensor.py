"""Exterior-power linear algebra.

Volume forms of m-frames, multiplicative and additive compound matrices,
singular value functions of non-integer order, and trace numbers of the
symmetric part of a generator.  All compound matrices are expressed in the
lexicographically ordered, un-normalized wedge basis e_I = e_{i1}^...^e_{im}.
"""

from __future__ import annotations

import itertools
import math
from typing import Sequence

import numpy as np

from .errors import InputError

__all__ = [
    "wedge_indices",
    "wedge_gram",
    "compound_multiplicative",
    "compound_additive",
    "singular_values",
    "omega_d",
    "trace_numbers",
]


def wedge_indices(n: int, m: int) -> list[tuple[int, ...]]:
    """Lexicographically ordered strictly increasing m-tuples from range(n)."""
    if not 1 <= m <= n:
        raise InputError(f"need 1 <= m <= n, got m={m}, n={n}")
    return list(itertools.combinations(range(n), m))


def _as_matrix(L, name="matrix") -> np.ndarray:
    A = np.asarray(L)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"{name} must be square 2-d, got shape {A.shape}")
    return A


def _check_metric(metric, n: int) -> np.ndarray | None:
    if metric is None:
        return None
    M = _as_matrix(metric, "metric")
    if M.shape[0] != n:
        raise InputError(f"metric is {M.shape[0]}x{M.shape[0]}, vectors have length {n}")
    if not np.allclose(M, M.conj().T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise InputError("metric must be Hermitian")
    try:
        np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise InputError("metric must be positive definite") from None
    return M


def wedge_gram(u: Sequence, v: Sequence, metric=None):
    """Inner product of the wedges u_1^...^u_m and v_1^...^v_m.

    Returns det[<u_k, v_j>] / m! , the Gram-determinant pairing induced by
    the ambient (optionally weighted) inner product.  The 1/m! factor matches
    the un-normalized wedge basis convention used by the compound matrices.
    """
    U = np.atleast_2d(np.asarray(u))
    V = np.atleast_2d(np.asarray(v))
    if U.shape != V.shape:
        raise InputError(f"frame shapes differ: {U.shape} vs {V.shape}")
    m, n = U.shape
    if m > n:
        raise InputError(f"{m} vectors of length {n} cannot form a wedge")
    M = _check_metric(metric, n)
    if M is None:
        G = U.conj() @ V.T
    else:
        G = U.conj() @ M @ V.T
    return np.linalg.det(G) / math.factorial(m)


def compound_multiplicative(L, m: int) -> np.ndarray:
    """m-th multiplicative compound: the matrix of L^m acting on wedges.

    Entry (I, J) is the minor of L with rows I and columns J, indices in
    lexicographic order, so (AB)^(m) = A^(m) B^(m) and the top compound is
    det(L).
    """
    A = _as_matrix(L)
    n = A.shape[0]
    idx = wedge_indices(n, m)
    size = len(idx)
    rows = np.array(idx)
    # gather all minors in one batched determinant call
    sub = A[rows[:, None, :, None], rows[None, :, None, :]]
    out = np.linalg.det(sub.reshape(size * size, m, m)).reshape(size, size)
    return out


def compound_additive(T, m: int) -> np.ndarray:
    """m-th additive compound: generator of the compound flow.

    Defined by exp(t * additive) = multiplicative(exp(t T)) for all t; built
    combinatorially.  Entry (I, J): sum of diagonal entries over I when I = J,
    a single signed entry of T when |I ^ J| = m - 1, zero otherwise.
    """
    A = _as_matrix(T)
    n = A.shape[0]
    idx = wedge_indices(n, m)
    pos = {I: a for a, I in enumerate(idx)}
    out = np.zeros((len(idx), len(idx)), dtype=np.result_type(A.dtype, np.float64))
    for col, J in enumerate(idx):
        out[col, col] = sum(A[j, j] for j in J)
        Jset = set(J)
        for q, s in enumerate(J):
            for r in range(n):
                if r == s or r in Jset:
                    continue
                I = tuple(sorted(Jset - {s} | {r}))
                p = I.index(r)
                out[pos[I], col] += (-1.0) ** (p + q) * A[r, s]
    return out


def singular_values(L) -> np.ndarray:
    """Singular values of L in nonincreasing order."""
    A = _as_matrix(L)
    return np.linalg.svd(A, compute_uv=False)


def omega_d(L, d: float) -> float:
    """Singular value function of order d >= 0.

    Product of the floor(d) largest singular values times the next one raised
    to the fractional part; omega_0 = 1, and values of d above the matrix
    dimension read missing singular values as zero.
    """
    if d < 0:
        raise InputError(f"order must be >= 0, got {d}")
    sv = singular_values(L)
    if d == 0:
        return 1.0
    n = sv.size
    m = int(math.floor(d))
    g = d - m
    if m > n or (m == n and g > 0):
        return 0.0
    val = float(np.prod(sv[:m]))
    if g > 0:
        val *= float(sv[m]) ** g
    return val


def trace_numbers(A, k: int) -> np.ndarray:
    """k largest eigenvalues of the symmetric part (A + A*)/2, nonincreasing.

    Their sum equals the supremum of Re tr(P A P) over rank-k orthogonal
    projectors, and the m-th partial sum is the largest eigenvalue of the
    m-th additive compound of the symmetric part.
    """
    M = _as_matrix(A)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    S = 0.5 * (M + M.conj().T)
    ev = np.linalg.eigvalsh(S)[::-1]
    return ev[:k]
