"""Row-stacking correspondence between operators and vectors.

``vec(A)[i*d + j] = A[i, j]``, i.e. ``|A>> = sum_ij A_ij |ij>``. Under this
convention ``vec(K rho K^dag) = (K kron K.conj()) vec(rho)``, so a channel with
Kraus operators ``K_i`` acts on vectorized states as ``M = sum_i K_i kron K_i*``.
"""

from __future__ import annotations

import math
from itertools import product

import numpy as np

from .numcore import as_matrix, as_square


def vec(A) -> np.ndarray:
    return as_square(A).reshape(-1).copy()


def devec(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = math.isqrt(v.size)
    if d * d != v.size:
        raise ValueError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def maximally_entangled(d: int) -> np.ndarray:
    """Unnormalized ``sum_i |ii>`` on ``C^d x C^d``."""
    return np.eye(d, dtype=complex).reshape(-1)


def vec_by_entangled_state(A) -> np.ndarray:
    """``(A x 1) sum_i |ii>``: the defining formula, used as an oracle for :func:`vec`."""
    A = as_square(A)
    d = A.shape[0]
    return np.kron(A, np.eye(d)) @ maximally_entangled(d)


def devec_partial_trace(v) -> np.ndarray:
    """Recover ``A`` as ``Tr_B(|A>> sum_i <ii|)``.

    Mathematically identical to :func:`devec`; evaluated literally so it can
    serve as an independent check on the reshape.
    """
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = math.isqrt(v.size)
    op = np.outer(v, maximally_entangled(d).conj())
    # indices: (a, b | a', b'), trace b against b'
    return np.einsum("abcb->ac", op.reshape(d, d, d, d))


def transfer_from_kraus(kraus) -> np.ndarray:
    """``sum_i K_i kron K_i*`` for a list of square Kraus matrices."""
    kraus = [as_square(K) for K in kraus]
    d = kraus[0].shape[0]
    M = np.zeros((d * d, d * d), dtype=complex)
    for K in kraus:
        M += np.kron(K, K.conj())
    return M


def vec_identity_check(kraus, rho) -> float:
    """Residual ``||vec(sum K rho K^dag) - (sum K x K*) vec(rho)||_2``.

    Both sides are computed independently: the left from the Kraus sum, the
    right from the transfer matrix.
    """
    rho = as_square(rho)
    out = sum(K @ rho @ np.conj(K).T for K in (as_square(K) for K in kraus))
    lhs = vec(out)
    rhs = transfer_from_kraus(kraus) @ vec(rho)
    return float(np.linalg.norm(lhs - rhs))


def bipartite_vec(H, d_a: int, d_b: int) -> np.ndarray:
    """``(H x 1_{A'B'}) sum_ij |i j i j>`` in the subsystem order A, B, A', B'."""
    H = as_matrix(H)
    n = d_a * d_b
    if H.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} operator, got {H.shape}")
    omega = np.zeros((d_a, d_b, d_a, d_b), dtype=complex)
    for i, j in product(range(d_a), range(d_b)):
        omega[i, j, i, j] = 1.0
    return np.kron(H, np.eye(n)) @ omega.reshape(-1)


def bipartite_devec(v, d_a: int, d_b: int) -> np.ndarray:
    """``Tr_{A'B'}(|H>> sum_ij <ijij|)``, the bipartite analogue of :func:`devec_partial_trace`."""
    n = d_a * d_b
    v = np.asarray(v, dtype=complex).reshape(-1)
    omega = np.zeros((d_a, d_b, d_a, d_b), dtype=complex)
    for i, j in product(range(d_a), range(d_b)):
        omega[i, j, i, j] = 1.0
    op = np.outer(v, omega.reshape(-1).conj())
    # indices: (AB, A'B' | AB, A'B'), trace out the primed pair
    return np.einsum("pkqk->pq", op.reshape(n, n, n, n))


def bipartite_index_permutation(d_a: int, d_b: int) -> np.ndarray:
    """Permutation taking ``vec(H)`` to the subsystem-ordered vector ``|H>>``.

    ``perm[k]`` is the position in :func:`bipartite_vec` of entry ``k`` of the
    row-stacked ``vec(H)``. Found by pushing each matrix unit through both
    constructions; for row stacking it comes out as the identity, which is
    why ``extend_bipartite`` plus the single-system machinery is exact.
    """
    if d_a < 1 or d_b < 1:
        raise ValueError("subsystem dimensions must be positive")
    n = d_a * d_b
    perm = np.empty(n * n, dtype=int)
    for k in range(n * n):
        E = np.zeros(n * n, dtype=complex)
        E[k] = 1.0
        target = bipartite_vec(E.reshape(n, n), d_a, d_b)
        hits = np.flatnonzero(np.abs(target) > 0.5)
        if hits.size != 1:
            raise AssertionError("matrix unit did not map to a single basis vector")
        perm[k] = hits[0]
    return perm
