"""Quantum states and CPTP channels in Kraus form."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import numcore
from .errors import DimensionMismatch, InvalidChannelError, InvalidStateError
from .vectorize import transfer_from_kraus

STATE_TOL = 1e-10
COMPLETENESS_TOL = 1e-8

ENSEMBLES = ("hilbert-schmidt", "bloch-ball-uniform", "haar-pure")

PAULI = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _frozen(A: np.ndarray) -> np.ndarray:
    A = np.array(A, dtype=complex)
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix.

    Construction validates the invariants at tolerance ``tol`` and stores the
    Hermitian part of the input.
    """

    matrix: np.ndarray
    tol: float = field(default=STATE_TOL, repr=False, compare=False)

    def __post_init__(self):
        try:
            A = numcore.as_square(self.matrix)
        except ValueError as exc:
            raise InvalidStateError(str(exc)) from None
        if A.shape[0] == 0:
            raise InvalidStateError("empty matrix")
        asym = numcore.hermitian_asymmetry(A)
        if asym > self.tol:
            raise InvalidStateError(f"state is not Hermitian (asymmetry {asym:.3e})")
        H = numcore.hermitian_part(A)
        tr = float(np.trace(H).real)
        if abs(tr - 1.0) > self.tol:
            raise InvalidStateError(f"state has trace {tr!r}, expected 1")
        lam = float(np.linalg.eigvalsh(H)[0])
        if lam < -self.tol:
            raise InvalidStateError(f"state has negative eigenvalue {lam:.3e}")
        object.__setattr__(self, "matrix", _frozen(H))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def as_density(rho, tol: float = STATE_TOL) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(rho, tol)


def project_to_density(A) -> DensityMatrix:
    """Nearest density matrix in eigenvalues: clip negatives, renormalize trace."""
    H = numcore.hermitian_part(numcore.as_square(A))
    w, V = np.linalg.eigh(H)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise InvalidStateError("matrix has no positive part")
    w = w / w.sum()
    return DensityMatrix((V * w) @ V.conj().T)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map ``rho -> sum_i K_i rho K_i^dag`` on a ``dim``-level system.

    The completeness relation must hold to ``COMPLETENESS_TOL``; channels that
    miss it are rejected rather than renormalized.
    """

    kraus: tuple

    def __post_init__(self):
        ops = []
        for K in self.kraus:
            try:
                ops.append(_frozen(numcore.as_square(K)))
            except ValueError as exc:
                raise InvalidChannelError(str(exc)) from None
        if not ops:
            raise InvalidChannelError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(K.shape != (d, d) for K in ops):
            raise InvalidChannelError("Kraus operators must all be square of the same size")
        err = float(np.max(np.abs(sum(K.conj().T @ K for K in ops) - np.eye(d))))
        if err > COMPLETENESS_TOL:
            raise InvalidChannelError(f"completeness relation violated by {err:.3e}")
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @cached_property
    def completeness_error(self) -> float:
        d = self.dim
        return float(np.max(np.abs(sum(K.conj().T @ K for K in self.kraus) - np.eye(d))))

    def apply_matrix(self, X) -> np.ndarray:
        """Linear action on an arbitrary ``dim x dim`` matrix."""
        X = _check_dim(X, self.dim)
        return sum(K @ X @ K.conj().T for K in self.kraus)

    def dual_matrix(self, A) -> np.ndarray:
        A = _check_dim(A, self.dim)
        return sum(K.conj().T @ A @ K for K in self.kraus)


def _check_dim(X, d: int) -> np.ndarray:
    X = numcore.as_square(X)
    if X.shape[0] != d:
        raise DimensionMismatch(f"operator has dimension {X.shape[0]}, channel acts on {d}")
    return X


def apply(ch: KrausChannel, rho) -> DensityMatrix:
    rho = as_density(rho)
    out = ch.apply_matrix(rho.matrix)
    # output trace inherits the channel's completeness error
    return DensityMatrix(out, max(STATE_TOL, 4 * ch.completeness_error))


def dual_apply(ch: KrausChannel, A) -> np.ndarray:
    """Adjoint map ``A -> sum_i K_i^dag A K_i`` under the trace inner product."""
    return ch.dual_matrix(A)


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """``M = sum_i K_i kron K_i*`` with its SVD computed on first use."""

    matrix: np.ndarray
    dim: int
    rtol: float = numcore.DEFAULT_RTOL

    @cached_property
    def svd(self) -> numcore.SvdFactorization:
        return numcore.svd(self.matrix, self.rtol)

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def is_invertible(self) -> bool:
        return self.rank == self.dim * self.dim

    @cached_property
    def pinv(self) -> np.ndarray:
        return numcore.pinv_from_svd(self.svd)


def transfer_matrix(ch: KrausChannel, rtol: float = numcore.DEFAULT_RTOL) -> TransferMatrix:
    return TransferMatrix(_frozen(transfer_from_kraus(ch.kraus)), ch.dim, rtol)


def extend_bipartite(ch: KrausChannel, dim_a: int) -> KrausChannel:
    """The channel ``1_A x E`` acting on ``dim_a * ch.dim`` levels."""
    if dim_a < 1:
        raise ValueError("dim_a must be at least 1")
    if dim_a == 1:
        return ch
    eye = np.eye(dim_a)
    return KrausChannel(tuple(np.kron(eye, K) for K in ch.kraus))


def identity_channel(d: int) -> KrausChannel:
    return KrausChannel((np.eye(d),))


def unitary_channel(U) -> KrausChannel:
    return KrausChannel((U,))


@dataclass(frozen=True)
class PauliChannelParams:
    """Probabilities ``(p0, p1, p2, p3)`` of applying ``1, X, Y, Z``."""

    p: tuple

    def __post_init__(self):
        p = tuple(float(x) for x in self.p)
        if len(p) != 4:
            raise ValueError("a Pauli channel needs exactly four probabilities")
        if any(x < 0 or x > 1 for x in p) or abs(sum(p) - 1) > 1e-12:
            raise ValueError(f"invalid probability vector {p}")
        object.__setattr__(self, "p", p)

    @property
    def q(self) -> np.ndarray:
        """Contraction factors ``(q0, q1, q2, q3)`` of the Bloch components."""
        p0, p1, p2, p3 = self.p
        return np.array(
            [p0 + p1 + p2 + p3, p0 + p1 - p2 - p3, p0 - p1 + p2 - p3, p0 - p1 - p2 + p3]
        )

    def channel(self) -> KrausChannel:
        return pauli_channel(self.p)


def pauli_channel(p) -> KrausChannel:
    params = p if isinstance(p, PauliChannelParams) else PauliChannelParams(tuple(p))
    return KrausChannel(tuple(np.sqrt(pi) * s for pi, s in zip(params.p, PAULI)))


def depolarizing(p: float) -> KrausChannel:
    return pauli_channel((1 - p, p / 3, p / 3, p / 3))


def amplitude_damping_qutrit(gamma: float) -> KrausChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    g = gamma
    A0 = np.diag([1.0, np.sqrt(1 - g), 1 - g]).astype(complex)
    A1 = np.zeros((3, 3), dtype=complex)
    A1[0, 1] = np.sqrt(g)
    A1[1, 2] = np.sqrt(2 * g * (1 - g))
    A2 = np.zeros((3, 3), dtype=complex)
    A2[0, 2] = g
    return KrausChannel((A0, A1, A2))


def from_bloch(r) -> DensityMatrix:
    r = np.asarray(r, dtype=float)
    if r.shape != (3,):
        raise ValueError("a Bloch vector has three components")
    return DensityMatrix(0.5 * (PAULI[0] + r[0] * PAULI[1] + r[1] * PAULI[2] + r[2] * PAULI[3]))


def to_bloch(rho) -> np.ndarray:
    A = np.asarray(rho, dtype=complex)
    if A.shape != (2, 2):
        raise DimensionMismatch("Bloch vectors exist only for qubits")
    return np.array([np.trace(s @ A).real for s in PAULI[1:]])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_density(dim: int, ensemble: str = "hilbert-schmidt", seed=None) -> DensityMatrix:
    """Sample a random state.

    ``ensemble`` is one of ``hilbert-schmidt`` (normalized Ginibre ``G G^dag``),
    ``bloch-ball-uniform`` (qubits only, uniform in the Bloch ball) or
    ``haar-pure``. ``seed`` may be an int, a seed sequence or a Generator.
    """
    rng = _rng(seed)
    if ensemble == "hilbert-schmidt":
        G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        W = G @ G.conj().T
        return DensityMatrix(W / np.trace(W).real)
    if ensemble == "bloch-ball-uniform":
        if dim != 2:
            raise ValueError("bloch-ball-uniform is defined for qubits only")
        v = rng.standard_normal(3)
        radius = rng.random() ** (1 / 3)
        return from_bloch(radius * v / np.linalg.norm(v))
    if ensemble == "haar-pure":
        psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        psi /= np.linalg.norm(psi)
        return DensityMatrix(np.outer(psi, psi.conj()))
    raise ValueError(f"unknown ensemble {ensemble!r}; choose from {ENSEMBLES}")


def random_channel(dim: int, n_kraus: int | None = None, seed=None) -> KrausChannel:
    """Channel from a random isometry ``C^d -> C^d x C^k`` (``k`` defaults to ``d``)."""
    rng = _rng(seed)
    k = dim if n_kraus is None else int(n_kraus)
    if k < 1:
        raise ValueError("n_kraus must be at least 1")
    G = rng.standard_normal((dim * k, dim)) + 1j * rng.standard_normal((dim * k, dim))
    Q, R = np.linalg.qr(G)
    Q = Q * (np.diag(R) / np.abs(np.diag(R)))
    return KrausChannel(tuple(Q[i * dim:(i + 1) * dim] for i in range(k)))


def fidelity(rho1, rho2) -> float:
    """Root fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))``, in ``[0, 1]``."""
    A = np.asarray(as_density(rho1), dtype=complex)
    B = np.asarray(as_density(rho2), dtype=complex)
    if A.shape != B.shape:
        raise DimensionMismatch("states have different dimensions")
    root = numcore.sqrtm_psd(A)
    inner = numcore.hermitian_part(root @ B @ root)
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    return float(min(1.0, np.sqrt(w).sum()))


# -- JSON ----------------------------------------------------------------------


def _encode(A: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(A)]


def _decode(rows, d: int, what: str) -> np.ndarray:
    A = np.array(rows, dtype=float)
    if A.shape != (d, d, 2):
        raise ValueError(f"{what}: expected {d}x{d} entries of [re, im], got shape {A.shape}")
    return A[..., 0] + 1j * A[..., 1]


def channel_to_json(ch: KrausChannel) -> dict:
    return {"dim": ch.dim, "kraus": [_encode(K) for K in ch.kraus]}


def channel_from_json(obj: dict) -> KrausChannel:
    try:
        d = int(obj["dim"])
        ops = [_decode(K, d, f"kraus[{i}]") for i, K in enumerate(obj["kraus"])]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed channel JSON: {exc!r}") from None
    return KrausChannel(tuple(ops))


def state_to_json(rho) -> dict:
    rho = as_density(rho)
    return {"dim": rho.dim, "matrix": _encode(rho.matrix)}


def state_from_json(obj: dict) -> DensityMatrix:
    try:
        d = int(obj["dim"])
        return DensityMatrix(_decode(obj["matrix"], d, "matrix"))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed state JSON: {exc!r}") from None


def load_channel(path) -> KrausChannel:
    return channel_from_json(json.loads(Path(path).read_text()))


def load_state(path) -> DensityMatrix:
    return state_from_json(json.loads(Path(path).read_text()))


def save_channel(ch: KrausChannel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_json(ch)))


def save_state(rho, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho)))
