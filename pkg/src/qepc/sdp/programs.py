"""Pre-compensation programs built on the standard-form solver.

* :func:`feasibility` -- is there a state ``rho_in`` with ``E(rho_in) = rho_t``?
  Posed as a phase-I problem: minimize ``t`` subject to the linear constraints
  ``Tr(E*(F_k) X) = Tr(F_k rho_t)`` and ``X + t 1 >= 0``; feasible iff ``t* <= tol``.
* :func:`max_fidelity` -- maximize ``Re Tr P`` over ``rho_in >= 0``, ``Tr rho_in = 1``
  and ``[[rho_t, P], [P^dag, E(rho_in)]] >= 0``; the optimum is the largest
  reachable fidelity with ``rho_t``.
* :func:`max_fidelity_pure` -- closed form for pure targets from the top
  eigenpair of ``E*(|psi><psi|)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import numcore
from ..channels import DensityMatrix, KrausChannel, as_density, dual_apply, project_to_density
from ..errors import DimensionMismatch, SolverIndeterminate
from .solver import (
    EMBED_TRACE_FACTOR,
    SdpOptions,
    SdpProblem,
    SdpSolution,
    SdpStatus,
    embed_hermitian,
    solve_sdp_batch,
    unembed_hermitian,
)

FEASIBILITY_TOL = 1e-8
# Tighter than the solver defaults: the phase-I optimum is compared against
# FEASIBILITY_TOL, so the objective itself must be accurate well below it.
FEASIBILITY_OPTIONS = SdpOptions(feas_tol=1e-10, gap_tol=1e-10,
                                 acceptable_feas_tol=1e-8, acceptable_gap_tol=1e-9)
FIDELITY_OPTIONS = SdpOptions(feas_tol=1e-9, gap_tol=1e-9,
                              acceptable_feas_tol=1e-8, acceptable_gap_tol=1e-7)


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Orthonormal Hermitian basis ``F_1 = 1/sqrt(d), F_2, ..., F_{d^2}``."""

    dim: int
    elements: np.ndarray

    def __len__(self) -> int:
        return self.elements.shape[0]

    def __iter__(self):
        return iter(self.elements)

    def coefficients(self, A) -> np.ndarray:
        """``Tr(F_k A)`` for every basis element."""
        return np.einsum("kij,ji->k", self.elements, np.asarray(A, dtype=complex))

    def expand(self, coeffs) -> np.ndarray:
        return np.einsum("k,kij->ij", np.asarray(coeffs), self.elements)


def gell_mann_basis(d: int) -> OperatorBasis:
    """Normalized generalized Gell-Mann matrices, identity first.

    Order: ``1/sqrt(d)``, then for each pair ``j < k`` the symmetric and
    antisymmetric elements, then the ``d - 1`` diagonal ones. For ``d = 2`` this
    is ``(1, X, Y, Z) / sqrt(2)``.
    """
    if d < 1:
        raise ValueError("dimension must be positive")
    els = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1 / np.sqrt(2)
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j / np.sqrt(2), 1j / np.sqrt(2)
            els += [sym, anti]
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        els.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    E = np.array(els)
    gram = np.einsum("aij,bji->ab", E, E)
    assert np.allclose(gram, np.eye(d * d), atol=1e-12)
    return OperatorBasis(d, E)


def _embed(H) -> np.ndarray:
    return embed_hermitian(H) / EMBED_TRACE_FACTOR


def _targets(targets, d: int) -> np.ndarray:
    mats = np.array([np.asarray(as_density(t).matrix) for t in targets])
    if mats.ndim != 3 or mats.shape[1:] != (d, d):
        raise DimensionMismatch(f"targets must be {d}x{d} states")
    return mats


def _raise_indeterminate(batch, i, what):
    if batch.status[i] == SdpStatus.MAX_ITER.value:
        raise SolverIndeterminate(f"{what}: solver stopped without a certificate", batch.solution(i))


# -- feasibility ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FeasibilityResult:
    """Outcome of the phase-I program.

    ``t_star`` is the optimal shift; the target is reachable iff it does not
    exceed the tolerance. When infeasible by linear algebra alone (target
    outside the range of the channel), ``t_star`` is ``inf`` and
    ``range_residual`` measures the violation.
    """

    feasible: bool
    state: DensityMatrix | None
    t_star: float
    range_residual: float
    solution: SdpSolution

    def __bool__(self) -> bool:
        return self.feasible


def feasibility_problem(ch: KrausChannel) -> tuple[SdpProblem, OperatorBasis]:
    d = ch.dim
    basis = gell_mann_basis(d)
    B = np.array([dual_apply(ch, F) for F in basis])
    trB = np.einsum("kii->k", B).real
    A_z = np.array([_embed(Bk) for Bk in B])
    A_s = -trB[:, None, None]
    C = (np.zeros((2 * d, 2 * d)), np.ones((1, 1)))
    prob = SdpProblem(C, (A_z, A_s), np.zeros(d * d))
    return prob, basis


def feasibility_batch(ch, targets, tol: float = FEASIBILITY_TOL, opts: SdpOptions | None = None):
    d = ch.dim
    mats = _targets(targets, d)
    prob, basis = feasibility_problem(ch)
    trB = -prob.A[1][:, 0, 0]
    coef = np.einsum("kij,nji->nk", basis.elements, mats).real
    rhs = coef - trB / d
    batch = solve_sdp_batch(prob, rhs, opts or FEASIBILITY_OPTIONS)
    results = []
    for i in range(len(batch)):
        _raise_indeterminate(batch, i, "feasibility")
        sol = batch.solution(i)
        if sol.status is SdpStatus.INFEASIBLE:
            results.append(FeasibilityResult(False, None, np.inf, sol.primal_residual, sol))
            continue
        t = sol.primal_objective - 1 / d
        Z = unembed_hermitian(sol.X[0])
        X = Z - t * np.eye(d)
        state = project_to_density(X) if t <= tol else None
        results.append(FeasibilityResult(t <= tol, state, float(t), sol.primal_residual, sol))
    return results


def feasibility(ch: KrausChannel, rho_t, tol: float = FEASIBILITY_TOL,
                opts: SdpOptions | None = None) -> FeasibilityResult:
    """Search for ``rho_in >= 0`` with ``E(rho_in) = rho_t``.

    Raises :class:`SolverIndeterminate` if the solver hits its iteration limit.
    """
    return feasibility_batch(ch, [rho_t], tol, opts)[0]


# -- fidelity maximization -----------------------------------------------------


SUPPORT_TOL = 1e-12


def max_fidelity_problem(ch: KrausChannel, rank: int | None = None) -> SdpProblem:
    """Fidelity program for targets of the given rank (default: full rank).

    With ``rho_t = V Lambda V^dag`` on its rank-``r`` support, the coupling
    ``P = V Lambda^(1/2) W`` turns the LMI into ``[[1_r, W], [W^dag, E(rho_in)]] >= 0``.
    The top block is then the same for every target; restricting to the
    support keeps a strictly feasible point for singular targets, and the
    congruence keeps tiny eigenvalues out of the constraint. The stored
    objective is the one for the maximally mixed target on the first ``r``
    basis states; :func:`max_fidelity_batch` supplies the actual one.
    """
    d = ch.dim
    r = d if rank is None else int(rank)
    if not 1 <= r <= d:
        raise ValueError("rank must lie in [1, dim]")
    n = r + d
    top = gell_mann_basis(r)
    basis = gell_mann_basis(d)
    cons_x, cons_r = [], []
    for G in top:
        H = np.zeros((n, n), dtype=complex)
        H[:r, :r] = G
        cons_x.append(_embed(H))
        cons_r.append(np.zeros((2 * d, 2 * d)))
    for G in basis:
        H = np.zeros((n, n), dtype=complex)
        H[r:, r:] = G
        cons_x.append(_embed(H))
        cons_r.append(-_embed(dual_apply(ch, G)))
    cons_x.append(np.zeros((2 * n, 2 * n)))
    cons_r.append(_embed(np.eye(d)))
    rhs = np.zeros(r * r + d * d + 1)
    rhs[0] = np.sqrt(r)  # Tr(F_1 1_r) with F_1 = 1/sqrt(r)
    rhs[-1] = 1.0
    C = (_fidelity_objective(np.eye(d)[:, :r] / np.sqrt(r)), np.zeros((2 * d, 2 * d)))
    return SdpProblem(C, (np.array(cons_x), np.array(cons_r)), rhs)


def _fidelity_objective(Vr: np.ndarray) -> np.ndarray:
    """Embedded ``-Q`` with ``Tr(Q X) = Re Tr(V_r W)``; works on stacks of ``V_r``."""
    d, r = Vr.shape[-2:]
    n = r + d
    Q = np.zeros(Vr.shape[:-2] + (n, n), dtype=complex)
    Q[..., :r, r:] = np.swapaxes(Vr, -1, -2).conj() / 2
    Q[..., r:, :r] = Vr / 2
    return -_embed(Q)


def max_fidelity_batch(ch, targets, opts: SdpOptions | None = None):
    """Vectorized :func:`max_fidelity`; returns ``(fidelities, states, batches)``.

    Targets are grouped by numerical rank; ``batches`` maps rank to the
    solver output and the target indices it covers.
    """
    d = ch.dim
    mats = _targets(targets, d)
    w, V = np.linalg.eigh(mats)
    w, V = w[:, ::-1], V[:, :, ::-1]
    ranks = np.count_nonzero(w > SUPPORT_TOL, axis=1)
    fids = np.empty(mats.shape[0])
    states = [None] * mats.shape[0]
    batches = {}
    for r in np.unique(ranks):
        idx = np.flatnonzero(ranks == r)
        prob = max_fidelity_problem(ch, r)
        rhs = np.tile(prob.b, (idx.size, 1))
        VL = V[idx, :, :r] * np.sqrt(w[idx, None, :r])
        C = (_fidelity_objective(VL), np.zeros((idx.size, 2 * d, 2 * d)))
        batch = solve_sdp_batch(prob, rhs, opts or FIDELITY_OPTIONS, C=C)
        batches[int(r)] = (idx, batch)
        for j, i in enumerate(idx):
            _raise_indeterminate(batch, j, "max_fidelity")
            if batch.status[j] != SdpStatus.OPTIMAL.value:
                raise SolverIndeterminate(
                    f"max_fidelity: unexpected solver status {batch.status[j]}", batch.solution(j)
                )
            fids[i] = min(1.0, -batch.primal_objective[j])
            states[i] = project_to_density(unembed_hermitian(batch.X[1][j]))
    return fids, states, batches


def max_fidelity(ch: KrausChannel, rho_t, opts: SdpOptions | None = None):
    """Largest ``F(rho_t, E(rho_in))`` over input states, and an optimal input.

    Returns ``(F, rho_in)``.
    """
    fids, states, _ = max_fidelity_batch(ch, [rho_t], opts)
    return float(fids[0]), states[0]


def max_fidelity_pure(ch: KrausChannel, psi):
    """Closed-form optimum for a pure target ``|psi>``.

    ``F = sqrt(lambda_max(E*(|psi><psi|)))`` attained by the top eigenvector.
    Degenerate maxima resolve to the first column returned by
    :func:`numcore.eig_hermitian`.
    """
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.size != ch.dim:
        raise DimensionMismatch("target vector does not match the channel dimension")
    psi = psi / np.linalg.norm(psi)
    w, V = numcore.eig_hermitian(dual_apply(ch, np.outer(psi, psi.conj())))
    v = V[:, 0]
    return float(np.sqrt(max(w[0], 0.0))), DensityMatrix(np.outer(v, v.conj()))
