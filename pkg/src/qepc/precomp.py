"""Analytic pre-compensation: solve ``E(rho_in) = rho_t`` through the transfer matrix.

The procedure sorts every (channel, target) pair into one of four cases:

====  ==========================  ===========================================
case  transfer matrix ``M``        outcome
====  ==========================  ===========================================
1a    invertible                  candidate ``M^-1 vec(rho_t)`` is a state
1b    invertible                  candidate is not PSD, no preimage exists
2a    singular                    ``vec(rho_t)`` outside the range of ``M``
2b    singular                    affine family of preimages; PSD search via SDP
====  ==========================  ===========================================

Invertibility is a rank decision on the SVD (relative cutoff ``rtol``), never
a determinant test.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import numcore
from .channels import (
    PAULI,
    DensityMatrix,
    KrausChannel,
    PauliChannelParams,
    as_density,
    extend_bipartite,
    from_bloch,
    project_to_density,
    to_bloch,
    transfer_matrix,
)
from .errors import DimensionMismatch, IllConditionedError
from .sdp.programs import feasibility_batch
from .vectorize import vec

RANGE_TOL = 1e-8
PSD_CLIP_TOL = 1e-10
TRACE_TOL = 1e-9
CANDIDATE_HERMITIAN_TOL = 1e-8


class InfeasibleReason(str, Enum):
    NOT_IN_RANGE = "NotInRange"
    CANDIDATE_NOT_PSD = "CandidateNotPSD"


@dataclass(frozen=True, eq=False)
class Unique:
    """Case 1a: the single preimage is a valid state."""

    rho_in: DensityMatrix
    residual: float
    case: str = "1a"

    @property
    def feasible(self) -> bool:
        return True

    @property
    def state(self) -> DensityMatrix:
        return self.rho_in


@dataclass(frozen=True, eq=False)
class Family:
    """Case 2b: ``vec(particular) + span(kernel_basis)`` solves ``M v = vec(rho_t)``.

    ``particular`` is the minimal-norm solution and is reported whether or not
    it is PSD. ``psd_member`` is a valid input state from the family, or
    ``None`` when the family contains no state at all.
    """

    particular: np.ndarray
    kernel_basis: np.ndarray
    psd_member: DensityMatrix | None
    residual: float
    case: str = "2b"

    @property
    def feasible(self) -> bool:
        return self.psd_member is not None

    @property
    def state(self) -> DensityMatrix | None:
        return self.psd_member


@dataclass(frozen=True, eq=False)
class Infeasible:
    """Cases 1b and 2a.

    ``certificate`` is the smallest eigenvalue of the candidate for
    ``CandidateNotPSD`` and the range residual ``||M M^g v - v||`` for
    ``NotInRange``. ``candidate`` holds the non-PSD preimage in case 1b.
    """

    reason: InfeasibleReason
    certificate: float
    case: str
    candidate: np.ndarray | None = None

    @property
    def feasible(self) -> bool:
        return False

    @property
    def state(self) -> None:
        return None


PrecompResult = Unique | Family | Infeasible


def _target(ch: KrausChannel, rho_t) -> DensityMatrix:
    rho_t = as_density(rho_t)
    if rho_t.dim != ch.dim:
        raise DimensionMismatch(f"target has dimension {rho_t.dim}, channel acts on {ch.dim}")
    return rho_t


def _classify_candidates(deltas: np.ndarray, M: np.ndarray, V: np.ndarray, psd_tol: float) -> list:
    asym = np.array([numcore.hermitian_asymmetry(D) for D in deltas])
    tr = np.einsum("nii->n", deltas)
    bad = (asym > CANDIDATE_HERMITIAN_TOL) | (np.abs(tr - 1) > TRACE_TOL)
    if bad.any():
        # both hold exactly for any invertible CPTP transfer matrix
        i = int(np.flatnonzero(bad)[0])
        raise IllConditionedError(
            f"inverse image lost Hermiticity or trace (asymmetry {asym[i]:.2e}, trace {tr[i]:.12g})"
        )
    H = (deltas + np.swapaxes(deltas, -1, -2).conj()) / 2
    lam = np.linalg.eigvalsh(H)[:, 0]
    out = []
    for Hi, li, vi in zip(H, lam, V):
        if li < -psd_tol:
            out.append(Infeasible(InfeasibleReason.CANDIDATE_NOT_PSD, float(li), "1b", Hi))
        else:
            rho = project_to_density(Hi)
            out.append(Unique(rho, float(np.linalg.norm(M @ vec(rho.matrix) - vi))))
    return out


def solve_exact(ch: KrausChannel, rho_t, rtol: float = numcore.DEFAULT_RTOL, *,
                range_tol: float = RANGE_TOL, psd_tol: float = PSD_CLIP_TOL) -> PrecompResult:
    """Run the four-case analytic procedure for ``ch`` and target ``rho_t``.

    ``rtol`` is the relative singular-value cutoff for the rank of ``M``;
    ``range_tol`` bounds ``||M M^g v - v|| / ||v||`` for a target in the range;
    candidate eigenvalues down to ``-psd_tol`` are clipped to zero.
    """
    return solve_exact_many(ch, [rho_t], rtol, range_tol=range_tol, psd_tol=psd_tol)[0]


def solve_exact_many(ch: KrausChannel, targets, rtol: float = numcore.DEFAULT_RTOL, *,
                     range_tol: float = RANGE_TOL, psd_tol: float = PSD_CLIP_TOL) -> list:
    """:func:`solve_exact` for many targets, sharing one SVD of ``M``.

    Targets that land in case 2b are searched for a PSD member in a single
    batched feasibility solve.
    """
    targets = [_target(ch, t) for t in targets]
    if not targets:
        return []
    tm = transfer_matrix(ch, rtol)
    M = tm.matrix
    d = ch.dim
    V = np.array([t.matrix.reshape(-1) for t in targets])
    X0 = V @ tm.pinv.T
    if tm.is_invertible:
        return _classify_candidates(X0.reshape(-1, d, d), M, V, psd_tol)

    miss = np.linalg.norm(X0 @ M.T - V, axis=1)
    in_range = miss <= range_tol * np.linalg.norm(V, axis=1)
    out = [None] * len(targets)
    for i in np.flatnonzero(~in_range):
        out[i] = Infeasible(InfeasibleReason.NOT_IN_RANGE, float(miss[i]), "2a")
    idx = np.flatnonzero(in_range)
    if idx.size:
        kernel = tm.svd.kernel_basis()
        found = feasibility_batch(ch, [targets[i] for i in idx])
        for i, f in zip(idx, found):
            out[i] = Family(X0[i].reshape(d, d), kernel, f.state, float(miss[i]))
    return out


def solve_exact_bipartite(ch: KrausChannel, dim_a: int, rho_t,
                          rtol: float = numcore.DEFAULT_RTOL, **tols) -> PrecompResult:
    """Same procedure for ``1_A x E`` acting on a ``dim_a x ch.dim`` bipartite target.

    Row-stacked vectorization of the joint operator coincides with the
    subsystem-ordered one, so the single-system path applies unchanged.
    """
    return solve_exact(extend_bipartite(ch, dim_a), rho_t, rtol, **tols)


def pauli_qubit_analytic(params: PauliChannelParams, rho_t,
                         rtol: float = numcore.DEFAULT_RTOL) -> PrecompResult:
    """Closed-form solution for a Pauli channel, ``R_i = r_i / q_i``.

    Components with ``q_k = 0`` need ``r_k = 0`` and are otherwise free; they
    are set to zero, which is the minimal-norm member, and the family is
    returned with kernel vectors ``vec(sigma_k) / sqrt(2)``.
    """
    if not isinstance(params, PauliChannelParams):
        params = PauliChannelParams(tuple(params))
    rho_t = as_density(rho_t)
    r = to_bloch(rho_t.matrix)
    q = params.q
    # same rank rule as the SVD path: singular values of M are |q_0|, ..., |q_3|
    zero = np.abs(q[1:]) <= rtol * np.max(np.abs(q))
    v_norm = np.linalg.norm(rho_t.matrix)
    R = np.where(zero, 0.0, r / np.where(zero, 1.0, q[1:]))
    delta = 0.5 * (np.eye(2) + sum(Rk * s for Rk, s in zip(R, PAULI[1:])))

    if not zero.any():
        lam = (1 - np.linalg.norm(R)) / 2
        if lam < -PSD_CLIP_TOL:
            return Infeasible(InfeasibleReason.CANDIDATE_NOT_PSD, float(lam), "1b", delta)
        rho = _bloch_state(R)
        out = params.channel().apply_matrix(rho.matrix)
        return Unique(rho, float(np.linalg.norm(out - rho_t.matrix)))

    miss = float(np.linalg.norm(r[zero]) / np.sqrt(2))
    if miss > RANGE_TOL * v_norm:
        return Infeasible(InfeasibleReason.NOT_IN_RANGE, miss, "2a")
    kernel = np.array([vec(s) / np.sqrt(2) for s, z in zip(PAULI[1:], zero) if z]).T
    member = _bloch_state(R) if np.linalg.norm(R) <= 1 + 2 * PSD_CLIP_TOL else None
    return Family(delta, kernel, member, miss)


def _bloch_state(R: np.ndarray) -> DensityMatrix:
    n = np.linalg.norm(R)
    return from_bloch(R / n if n > 1 else R)
