"""Random strictly feasible primal/dual SDP instances with known interior points."""

import numpy as np

from qepc.sdp.solver import SdpProblem


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return (A + A.T) / 2


def _pd(rng, n):
    G = rng.standard_normal((n, n))
    return G @ G.T / n + 0.1 * np.eye(n)


def random_group(rng, count):
    """``count`` instances sharing block sizes and constraint matrices."""
    blocks = [int(x) for x in rng.integers(1, 5, size=rng.integers(1, 3))]
    total = sum(n * (n + 1) // 2 for n in blocks)
    m = int(rng.integers(1, total + 1))
    A = tuple(np.array([_sym(rng, n) for _ in range(m)]) for n in blocks)
    X0 = [np.array([_pd(rng, n) for _ in range(count)]) for n in blocks]
    S0 = [np.array([_pd(rng, n) for _ in range(count)]) for n in blocks]
    y0 = rng.standard_normal((count, m))
    b = sum(np.einsum("kij,nij->nk", a, x) for a, x in zip(A, X0))
    C = tuple(np.einsum("nk,kij->nij", y0, a) + s for a, s in zip(A, S0))
    prob = SdpProblem(tuple(np.zeros((n, n)) for n in blocks), A, np.zeros(m))
    return prob, b, C


def kkt_residuals(prob, b, C, sol):
    """Independently recomputed residuals of a returned solution."""
    AX = sum(np.einsum("kij,ij->k", a, x) for a, x in zip(prob.A, sol.X))
    p = np.linalg.norm(b - AX) / (1 + np.linalg.norm(b))
    R = [c - np.einsum("k,kij->ij", sol.y, a) - s for c, a, s in zip(C, prob.A, sol.S)]
    c_norm = np.sqrt(sum(np.sum(c * c) for c in C))
    d = np.sqrt(sum(np.sum(r * r) for r in R)) / (1 + c_norm)
    pobj = sum(np.sum(c * x) for c, x in zip(C, sol.X))
    dobj = b @ sol.y
    gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
    lam_x = min(np.linalg.eigvalsh(x)[0] for x in sol.X)
    lam_s = min(np.linalg.eigvalsh(s)[0] for s in sol.S)
    return p, d, gap, lam_x, lam_s
