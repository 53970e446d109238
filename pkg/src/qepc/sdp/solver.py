"""Small dense semidefinite programs in real symmetric standard form.

Primal::

    minimize <C, X>  s.t.  <A_k, X> = b_k,  X = diag(X_1, ..., X_p) >= 0

Dual::

    maximize b.y  s.t.  sum_k y_k A_k + S = C,  S >= 0

Solved by an infeasible-start primal-dual path-following method with
Nesterov-Todd scaling and a Mehrotra predictor-corrector. Problems that share
the constraint matrices ``A`` are solved together as a batch, one numpy stack
per block; ``b`` and optionally ``C`` vary per problem.

Complex Hermitian data is handled by :func:`embed_hermitian`; see
:data:`EMBED_TRACE_FACTOR`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import logging
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

log = logging.getLogger(__name__)

EMBED_TRACE_FACTOR = 2.0
"""``Tr(embed(A) embed(X)) = EMBED_TRACE_FACTOR * Re Tr(A X)`` for Hermitian ``A, X``."""


def embed_hermitian(H: np.ndarray) -> np.ndarray:
    """Real symmetric image ``[[Re H, -Im H], [Im H, Re H]]`` of a complex matrix.

    ``H`` is PSD iff its image is; every eigenvalue of ``H`` appears twice in
    the image. Works on stacks (leading axes).
    """
    H = np.asarray(H)
    re, im = H.real, H.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def unembed_hermitian(Y: np.ndarray) -> np.ndarray:
    """Inverse of :func:`embed_hermitian`.

    A general symmetric ``Y`` is first averaged onto the embedded subspace,
    which merges the duplicated eigenpairs.
    """
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[-1] // 2
    y11, y12 = Y[..., :n, :n], Y[..., :n, n:]
    y21, y22 = Y[..., n:, :n], Y[..., n:, n:]
    return (y11 + y22) / 2 + 1j * (y21 - y12) / 2


class SdpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITER = "MaxIter"


@dataclass(frozen=True)
class SdpOptions:
    feas_tol: float = 1e-8
    gap_tol: float = 1e-7
    max_iter: int = 200
    infeas_tol: float = 1e-8
    rank_rtol: float = 1e-10
    chunk_size: int = 4096
    stall_iter: int = 8
    acceptable_feas_tol: float | None = None
    acceptable_gap_tol: float | None = None


@dataclass(frozen=True, eq=False)
class SdpProblem:
    """Block-diagonal standard-form SDP.

    ``C[j]`` is the ``n_j x n_j`` objective block; ``A[j]`` stacks the ``m``
    constraint matrices restricted to block ``j`` with shape ``(m, n_j, n_j)``.
    """

    C: tuple
    A: tuple
    b: np.ndarray

    def __post_init__(self):
        C = tuple(np.asarray(c, dtype=float) for c in self.C)
        A = tuple(np.asarray(a, dtype=float) for a in self.A)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if len(C) != len(A) or not C:
            raise ValueError("C and A must list the same, non-empty set of blocks")
        for c, a in zip(C, A):
            n = c.shape[0]
            if c.shape != (n, n) or a.shape != (b.size, n, n):
                raise ValueError("block shapes are inconsistent")
            if np.max(np.abs(c - c.T), initial=0) > 1e-12:
                raise ValueError("objective block is not symmetric")
            if np.max(np.abs(a - a.transpose(0, 2, 1)), initial=0) > 1e-12:
                raise ValueError("constraint matrices are not symmetric")
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def blocks(self) -> tuple:
        return tuple(c.shape[0] for c in self.C)

    @property
    def num_constraints(self) -> int:
        return self.b.size

    def constraint_matrix(self) -> np.ndarray:
        """``(m, sum n_j^2)`` matrix whose rows are the flattened ``A_k``."""
        return np.concatenate([a.reshape(a.shape[0], -1) for a in self.A], axis=1)

    def with_rhs(self, b) -> "SdpProblem":
        return SdpProblem(self.C, self.A, b)


@dataclass(frozen=True, eq=False)
class SdpSolution:
    status: SdpStatus
    X: tuple
    y: np.ndarray
    S: tuple
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    certificate: np.ndarray | None = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


@dataclass(frozen=True, eq=False)
class BatchSolution:
    """Solutions of ``N`` problems sharing ``A``; arrays carry a leading ``N`` axis."""

    status: np.ndarray
    X: tuple
    y: np.ndarray
    S: tuple
    primal_objective: np.ndarray
    dual_objective: np.ndarray
    gap: np.ndarray
    primal_residual: np.ndarray
    dual_residual: np.ndarray
    iterations: np.ndarray
    certificate: np.ndarray

    def __len__(self) -> int:
        return self.status.shape[0]

    def solution(self, i: int) -> SdpSolution:
        cert = self.certificate[i]
        return SdpSolution(
            status=SdpStatus(self.status[i]),
            X=tuple(x[i] for x in self.X),
            y=self.y[i],
            S=tuple(s[i] for s in self.S),
            primal_objective=float(self.primal_objective[i]),
            dual_objective=float(self.dual_objective[i]),
            gap=float(self.gap[i]),
            primal_residual=float(self.primal_residual[i]),
            dual_residual=float(self.dual_residual[i]),
            iterations=int(self.iterations[i]),
            certificate=None if np.all(np.isnan(cert)) else cert,
        )


def solve_sdp(prob: SdpProblem, opts: SdpOptions | None = None) -> SdpSolution:
    return solve_sdp_batch(prob, prob.b[None, :], opts).solution(0)


def solve_sdp_batch(prob: SdpProblem, b, opts: SdpOptions | None = None, C=None) -> BatchSolution:
    """Solve ``prob`` once for every row of ``b`` (shape ``(N, m)``).

    ``C`` optionally overrides the objective per problem: one ``(N, n_j, n_j)``
    stack per block.
    """
    opts = opts or SdpOptions()
    b = np.atleast_2d(np.asarray(b, dtype=float))
    N, m = b.shape
    if m != prob.num_constraints:
        raise ValueError(f"b has {m} columns, problem has {prob.num_constraints} constraints")
    blocks = prob.blocks
    if C is None:
        C = tuple(np.broadcast_to(c, (N, n, n)) for c, n in zip(prob.C, blocks))
    else:
        C = tuple(np.asarray(c, dtype=float) for c in C)
        if len(C) != len(blocks) or any(c.shape != (N, n, n) for c, n in zip(C, blocks)):
            raise ValueError("per-problem objective has the wrong shape")
        C = tuple(_sym(c) for c in C)

    # Orthonormalize the constraints once: A = U_r diag(s_r) V_r^T. Inconsistent
    # right-hand sides are infeasible by linear algebra alone.
    Amat = prob.constraint_matrix()
    U, s, Vt = np.linalg.svd(Amat, full_matrices=False)
    r = int(np.count_nonzero(s > opts.rank_rtol * s[0])) if s.size and s[0] > 0 else 0
    Ur, sr, Vr = U[:, :r], s[:r], Vt[:r]
    b_red = (b @ Ur) / sr
    b_perp = b - (b @ Ur) @ Ur.T
    bnorm = np.linalg.norm(b, axis=1)
    inconsistent = np.linalg.norm(b_perp, axis=1) > opts.feas_tol * (1 + bnorm)

    out = _Output(N, m, blocks)
    for i in np.flatnonzero(inconsistent):
        y = b_perp[i] / (b_perp[i] @ b[i])
        out.status[i] = SdpStatus.INFEASIBLE.value
        out.certificate[i] = y
        out.primal_residual[i] = np.linalg.norm(b_perp[i]) / (1 + bnorm[i])
        out.y[i] = y

    A_red = tuple(part.reshape(r, n, n) for part, n in zip(_split(Vr, blocks), blocks))
    A_red = tuple((a + a.transpose(0, 2, 1)) / 2 for a in A_red)
    todo = np.flatnonzero(~inconsistent)
    chunks = [todo[i : i + opts.chunk_size] for i in range(0, todo.size, opts.chunk_size)]

    def run(idx):
        return _ipm(tuple(c[idx] for c in C), A_red, b_red[idx], opts, prob, b[idx], Ur, sr)

    workers = min(_thread_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(idx) for idx in chunks]
    for idx, res in zip(chunks, results):
        out.store(idx, res)
    return out.finish()


def _thread_count() -> int:
    """Worker threads for chunked batches: ``QEPC_THREADS``, 0 or unset meaning one per CPU."""
    try:
        n = int(os.environ.get("QEPC_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _split(V: np.ndarray, blocks) -> list:
    parts, pos = [], 0
    for n in blocks:
        parts.append(V[:, pos : pos + n * n])
        pos += n * n
    return parts


class _Output:
    def __init__(self, N, m, blocks):
        self.status = np.full(N, SdpStatus.MAX_ITER.value, dtype=object)
        self.X = [np.zeros((N, n, n)) for n in blocks]
        self.S = [np.zeros((N, n, n)) for n in blocks]
        self.y = np.zeros((N, m))
        nanf = lambda: np.full(N, np.nan)  # noqa: E731
        self.pobj, self.dobj, self.gap = nanf(), nanf(), nanf()
        self.primal_residual, self.dual_residual = nanf(), nanf()
        self.iterations = np.zeros(N, dtype=int)
        self.certificate = np.full((N, m), np.nan)

    def store(self, idx, res):
        for key in ("status", "y", "pobj", "dobj", "gap", "primal_residual",
                    "dual_residual", "iterations", "certificate"):
            getattr(self, key)[idx] = res[key]
        for j in range(len(self.X)):
            self.X[j][idx] = res["X"][j]
            self.S[j][idx] = res["S"][j]

    def finish(self) -> BatchSolution:
        return BatchSolution(
            status=self.status, X=tuple(self.X), y=self.y, S=tuple(self.S),
            primal_objective=self.pobj, dual_objective=self.dobj, gap=self.gap,
            primal_residual=self.primal_residual, dual_residual=self.dual_residual,
            iterations=self.iterations, certificate=self.certificate,
        )


# -- interior point core -------------------------------------------------------


def _inner(X, Y) -> np.ndarray:
    return sum(np.einsum("nij,nij->n", x, y) for x, y in zip(X, Y))


def _A_op(A, X) -> np.ndarray:
    return sum(np.einsum("kij,nij->nk", a, x) for a, x in zip(A, X))


def _A_adj(A, y) -> list:
    return [np.einsum("nk,kij->nij", y, a) for a in A]


def _sym(X):
    return (X + np.swapaxes(X, -1, -2)) / 2


def _finite_rows(T) -> np.ndarray:
    return np.isfinite(T).reshape(T.shape[0], -1).all(axis=1)


def _factor(X):
    """``L`` with ``X = L L^T`` and its inverse, from an eigendecomposition."""
    X = _sym(X)
    ok = _finite_rows(X)
    w = np.ones(X.shape[:-1])
    Q = np.broadcast_to(np.eye(X.shape[-1]), X.shape).copy()
    if ok.any():
        w[ok], Q[ok] = np.linalg.eigh(X[ok])
    w = np.maximum(w, 1e-300)
    root = np.sqrt(w)
    return Q * root[:, None, :], np.swapaxes(Q, -1, -2) / root[:, :, None]


def _max_step(Linv, dX) -> np.ndarray:
    """Largest ``alpha`` with ``X + alpha dX >= 0`` (``inf`` if unbounded, 0 on overflow)."""
    T = _sym(Linv @ dX @ np.swapaxes(Linv, -1, -2))
    ok = _finite_rows(T)
    lam = np.full(T.shape[0], -np.inf)
    if ok.any():
        lam[ok] = np.linalg.eigvalsh(T[ok])[:, 0]
    with np.errstate(divide="ignore"):
        return np.where(lam < 0, -1.0 / np.where(lam < 0, lam, -1.0), np.inf)


def _schur_solve(M, rhs):
    try:
        return np.linalg.solve(M, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # singular only for problems without a strictly feasible point
        out = np.empty_like(rhs)
        for i in range(M.shape[0]):
            try:
                out[i] = np.linalg.solve(M[i], rhs[i])
            except np.linalg.LinAlgError:
                out[i] = np.linalg.lstsq(M[i], rhs[i], rcond=None)[0]
        return out


_METRICS = ("pobj", "dobj", "gap", "primal_residual", "dual_residual")


def _ipm(C, A, b, opts, prob, b_orig, Ur, sr):
    """Batched path-following loop.

    Every problem keeps its best iterate (by the worst normalized residual).
    When progress stalls, typically because the optimal face is degenerate
    and the scaling matrices grow too ill-conditioned to push the residuals
    further, the best iterate is returned: ``Optimal`` if it meets the
    acceptable tolerances, ``MaxIter`` otherwise.
    """
    N, r = b.shape
    blocks = [c.shape[-1] for c in C]
    ntot = sum(blocks)
    Cs = list(C)
    c_norm = np.sqrt(sum(np.einsum("nij,nij->n", c, c) for c in C))
    b_norm = np.linalg.norm(b_orig, axis=1)
    A_orig = prob.A
    acc_feas = max(opts.feas_tol, opts.acceptable_feas_tol or 0.0)
    acc_gap = max(opts.gap_tol, opts.acceptable_gap_tol or 0.0)

    X = [np.broadcast_to(np.eye(n), (N, n, n)).copy() for n in blocks]
    S = [np.broadcast_to(np.eye(n), (N, n, n)).copy() for n in blocks]
    y = np.zeros((N, r))
    best = {
        "merit": np.full(N, np.inf), "X": [x.copy() for x in X], "S": [s.copy() for s in S],
        "y": y.copy(), "it": np.zeros(N, dtype=int),
        **{k: np.full(N, np.nan) for k in _METRICS},
    }
    since_best = np.zeros(N, dtype=int)

    res = {
        "status": np.full(N, SdpStatus.MAX_ITER.value, dtype=object),
        "y": np.zeros((N, Ur.shape[0])),
        **{k: np.full(N, np.nan) for k in _METRICS},
        "iterations": np.zeros(N, dtype=int),
        "certificate": np.full((N, Ur.shape[0]), np.nan),
        "X": [np.zeros((N, n, n)) for n in blocks],
        "S": [np.zeros((N, n, n)) for n in blocks],
    }
    active = np.arange(N)

    def finalize(sel, status, it, src, cert=None):
        rows = active[sel]
        res["status"][rows] = status
        res["y"][rows] = (src["y"][sel] / sr) @ Ur.T
        res["iterations"][rows] = it[sel] if np.ndim(it) else it
        for key in _METRICS:
            res[key][rows] = src[key][sel]
        for j in range(len(blocks)):
            res["X"][j][rows] = src["X"][j][sel]
            res["S"][j][rows] = src["S"][j][sel]
        if cert is not None:
            res["certificate"][rows] = cert

    def finalize_best(sel):
        good = sel & (best["primal_residual"] <= acc_feas) & (best["dual_residual"] <= acc_feas) \
            & (best["gap"] <= acc_gap)
        if good.any():
            finalize(good, SdpStatus.OPTIMAL.value, best["it"], best)
        if (sel & ~good).any():
            finalize(sel & ~good, SdpStatus.MAX_ITER.value, best["it"], best)

    for it in range(opts.max_iter + 1):
        rp = b - _A_op(A, X)
        ATy = _A_adj(A, y)
        Rd = [c - s - a for c, s, a in zip(Cs, S, ATy)]
        pobj = _inner(Cs, X)
        dobj = np.einsum("nk,nk->n", b, y)
        xs = _inner(X, S)
        mu = xs / ntot

        # residuals measured against the original (unreduced) constraints,
        # with y mapped back exactly as it is reported
        p_raw = b_orig - _A_op(A_orig, X)
        pinf = np.linalg.norm(p_raw, axis=1) / (1 + b_norm)
        y_orig = (y / sr) @ Ur.T
        Rd_orig = [c - s - a for c, s, a in zip(Cs, S, _A_adj(A_orig, y_orig))]
        dinf = np.sqrt(sum(np.einsum("nij,nij->n", rd, rd) for rd in Rd_orig)) / (1 + c_norm)
        denom = 1 + np.abs(pobj) + np.abs(dobj)
        gap = np.maximum(np.abs(pobj - dobj), np.maximum(xs, 0)) / denom
        metrics = {"pobj": pobj, "dobj": dobj, "gap": gap,
                   "primal_residual": pinf, "dual_residual": dinf, "X": X, "S": S, "y": y}

        if log.isEnabledFor(logging.DEBUG):
            log.debug("it %3d active %d worst pinf %.2e dinf %.2e gap %.2e mu %.2e",
                      it, active.size, np.nanmax(pinf), np.nanmax(dinf), np.nanmax(gap),
                      np.nanmax(mu))

        finite = np.isfinite(pinf) & np.isfinite(dinf) & np.isfinite(gap)
        merit = np.where(finite, np.maximum(np.maximum(pinf, dinf) / opts.feas_tol,
                                            gap / opts.gap_tol), np.inf)
        improved = merit < 0.9 * best["merit"]
        since_best = np.where(improved, 0, since_best + 1)
        upd = merit < best["merit"]
        if upd.any():
            best["merit"][upd] = merit[upd]
            best["it"][upd] = it
            best["y"][upd] = y[upd]
            for key in _METRICS:
                best[key][upd] = metrics[key][upd]
            for j in range(len(blocks)):
                best["X"][j][upd] = X[j][upd]
                best["S"][j][upd] = S[j][upd]

        done = np.zeros(active.size, dtype=bool)
        ok = merit <= 1.0
        if ok.any():
            finalize(ok, SdpStatus.OPTIMAL.value, it, metrics)
            done |= ok

        # Farkas rays: y with A^T y + S = 0, b.y > 0 proves primal infeasibility;
        # X with A(X) = 0, <C, X> < 0 proves the dual infeasible.
        ray_d = np.sqrt(sum(np.einsum("nij,nij->n", a + s, a + s) for a, s in zip(ATy, S)))
        p_infeas = ~done & finite & (dobj > 0) & (ray_d <= opts.infeas_tol * dobj)
        if p_infeas.any():
            cert = (y[p_infeas] / sr) @ Ur.T / dobj[p_infeas, None]
            finalize(p_infeas, SdpStatus.INFEASIBLE.value, it, metrics, cert)
            done |= p_infeas
        ax = np.linalg.norm(b - rp, axis=1)
        d_infeas = ~done & finite & (pobj < 0) & (ax <= opts.infeas_tol * -pobj)
        if d_infeas.any():
            finalize(d_infeas, SdpStatus.UNBOUNDED.value, it, metrics)
            done |= d_infeas

        stalled = ~done & (~finite | (since_best >= opts.stall_iter))
        if it == opts.max_iter:
            stalled = ~done
        if stalled.any():
            finalize_best(stalled)
            done |= stalled

        if done.any():
            keep = ~done
            active = active[keep]
            X = [x[keep] for x in X]
            S = [s[keep] for s in S]
            Cs = [c[keep] for c in Cs]
            y, b, b_orig, b_norm = y[keep], b[keep], b_orig[keep], b_norm[keep]
            c_norm, since_best = c_norm[keep], since_best[keep]
            rp, Rd, mu = rp[keep], [rd[keep] for rd in Rd], mu[keep]
            best = {k: ([v[keep] for v in val] if isinstance(val, list) else val[keep])
                    for k, val in best.items()}
        if active.size == 0:
            break

        with np.errstate(all="ignore"):
            X, S, y = _step(X, S, y, A, rp, Rd, mu, ntot)

    return res


def _step(X, S, y, A, rp, Rd, mu, ntot):
    """One Mehrotra predictor-corrector step on the whole active batch."""
    # Nesterov-Todd scaling per block: G^T S G = D = G^-1 X G^-T, W = G G^T.
    G, Ginv, W, D, LXinv, LSinv = [], [], [], [], [], []
    for x, s in zip(X, S):
        Lx, Lxi = _factor(x)
        Ls, Lsi = _factor(s)
        P = np.swapaxes(Ls, -1, -2) @ Lx
        P[~_finite_rows(P)] = np.eye(P.shape[-1])
        Uv, d, Vt = np.linalg.svd(P)
        d = np.maximum(d, 1e-300)
        V = np.swapaxes(Vt, -1, -2)
        g = (Lx @ V) / np.sqrt(d)[:, None, :]
        G.append(g)
        Ginv.append((np.sqrt(d)[:, :, None] * Vt) @ Lxi)
        W.append(g @ np.swapaxes(g, -1, -2))
        D.append(d)
        LXinv.append(Lxi)
        LSinv.append(Lsi)

    # Schur complement M_kl = sum_j <A_k, W_j A_l W_j>
    WAW = [w[:, None] @ a[None] @ w[:, None] for w, a in zip(W, A)]
    M = sum(np.einsum("nlij,kij->nkl", waw, a) for waw, a in zip(WAW, A))
    M = (M + np.swapaxes(M, -1, -2)) / 2
    M[~_finite_rows(M)] = np.eye(M.shape[-1])
    WRdW = [w @ rd @ w for w, rd in zip(W, Rd)]

    def direction(Rc):
        # Rc: centrality right-hand sides in the scaled space
        GZG = []
        for g, d, rc in zip(G, D, Rc):
            Z = 2 * rc / (d[:, :, None] + d[:, None, :])
            GZG.append(g @ Z @ np.swapaxes(g, -1, -2))
        rhs = rp - _A_op(A, [gz - wr for gz, wr in zip(GZG, WRdW)])
        rhs[~np.isfinite(rhs)] = 0.0
        dy = _schur_solve(M, rhs)
        dS = [rd - a for rd, a in zip(Rd, _A_adj(A, dy))]
        dX = [_sym(gz - w @ ds @ w) for gz, w, ds in zip(GZG, W, dS)]
        return dX, dy, dS

    def step_lengths(dX, dS, frac):
        ap = np.min([_max_step(li, dx) for li, dx in zip(LXinv, dX)], axis=0)
        ad = np.min([_max_step(li, ds) for li, ds in zip(LSinv, dS)], axis=0)
        return np.minimum(1.0, frac * ap), np.minimum(1.0, frac * ad)

    # predictor
    Rc = [-np.einsum("ni,ij->nij", d * d, np.eye(d.shape[1])) for d in D]
    dXa, dya, dSa = direction(Rc)
    ap, ad = step_lengths(dXa, dSa, 1.0)
    mu_aff = _inner([x + ap[:, None, None] * dx for x, dx in zip(X, dXa)],
                    [s + ad[:, None, None] * ds for s, ds in zip(S, dSa)]) / ntot
    sigma = np.clip(mu_aff / np.maximum(mu, 1e-300), 0.0, 1.0) ** 3

    # corrector with the second-order term in the scaled space
    Rc = []
    for g, gi, d, dx, ds in zip(G, Ginv, D, dXa, dSa):
        dxs = gi @ dx @ np.swapaxes(gi, -1, -2)
        dss = np.swapaxes(g, -1, -2) @ ds @ g
        corr = _sym(dxs @ dss)
        eye = np.eye(d.shape[1])
        Rc.append((sigma * mu)[:, None, None] * eye
                  - np.einsum("ni,ij->nij", d * d, eye) - corr)
    dX, dy, dS = direction(Rc)
    ap, ad = step_lengths(dX, dS, 1.0)
    frac = 0.9 + 0.09 * np.minimum(ap, ad)
    ap, ad = np.minimum(1.0, frac * ap), np.minimum(1.0, frac * ad)

    X = [_sym(x + ap[:, None, None] * dx) for x, dx in zip(X, dX)]
    S = [_sym(s + ad[:, None, None] * ds) for s, ds in zip(S, dS)]
    return X, S, y + ad[:, None] * dy
