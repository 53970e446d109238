import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qepc import channels as c
from qepc.errors import DimensionMismatch, SolverIndeterminate
from qepc.sdp import programs as P
from qepc.sdp.solver import SdpOptions

from conftest import random_hermitian, seeds

PAULI_CH = c.pauli_channel((0.7, 0.1, 0.1, 0.1))


# -- basis ---------------------------------------------------------------------


def test_gell_mann_qubit_is_scaled_pauli():
    B = P.gell_mann_basis(2)
    expected = [s / np.sqrt(2) for s in c.PAULI]
    for F, E in zip(B, expected):
        np.testing.assert_allclose(F, E, atol=1e-15)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_gell_mann_orthonormal(d):
    B = P.gell_mann_basis(d)
    assert len(B) == d * d
    gram = np.einsum("aij,bji->ab", B.elements, B.elements)
    np.testing.assert_allclose(gram, np.eye(d * d), atol=1e-12)
    np.testing.assert_allclose(B.elements[0], np.eye(d) / np.sqrt(d))
    for F in B:
        np.testing.assert_allclose(F, F.conj().T)


@given(seeds, st.integers(2, 4))
def test_gell_mann_completeness(seed, d):
    H = random_hermitian(np.random.default_rng(seed), d)
    B = P.gell_mann_basis(d)
    coeffs = B.coefficients(H)
    np.testing.assert_allclose(coeffs.imag, 0, atol=1e-12)
    np.testing.assert_allclose(B.expand(coeffs), H, atol=1e-12)


def test_pauli_dual_basis_is_contracted():
    """B_k = E*(F_k) = q_k sigma_k / sqrt(2) for a Pauli channel."""
    params = c.PauliChannelParams((0.4, 0.3, 0.2, 0.1))
    ch = params.channel()
    for F, q, s in zip(P.gell_mann_basis(2), params.q, c.PAULI):
        np.testing.assert_allclose(c.dual_apply(ch, F), q * s / np.sqrt(2), atol=1e-15)


# -- feasibility ---------------------------------------------------------------


def test_feasibility_identity_returns_target():
    rho = c.random_density(3, seed=4)
    res = P.feasibility(c.identity_channel(3), rho)
    assert res.feasible
    np.testing.assert_allclose(res.state.matrix, rho.matrix, atol=1e-8)


def test_feasibility_pauli_reachable():
    target = c.from_bloch([0.3, 0, 0])
    res = P.feasibility(PAULI_CH, target)
    assert res
    np.testing.assert_allclose(c.apply(PAULI_CH, res.state).matrix, target.matrix, atol=1e-7)
    assert res.t_star == pytest.approx(-0.25, abs=1e-8)


def test_feasibility_pauli_unreachable():
    res = P.feasibility(PAULI_CH, c.from_bloch([0.7, 0, 0]))
    assert not res and res.state is None
    assert res.t_star > 1e-3


def test_feasibility_outside_range_has_infinite_shift():
    res = P.feasibility(c.pauli_channel((0.25,) * 4), c.from_bloch([0.1, 0, 0]))
    assert not res and res.t_star == np.inf
    assert res.solution.certificate is not None


def test_feasibility_indeterminate_raises():
    with pytest.raises(SolverIndeterminate) as exc:
        P.feasibility(PAULI_CH, c.from_bloch([0.3, 0, 0]), opts=SdpOptions(max_iter=2))
    assert exc.value.solution is not None


@given(seeds, st.integers(2, 3))
def test_feasible_state_satisfies_complex_constraints(seed, d):
    """Embedded solve mapped back reproduces the complex-domain constraints."""
    rng = np.random.default_rng(seed)
    ch = c.random_channel(d, 3, rng)
    rho_in = c.random_density(d, seed=rng)
    target = c.apply(ch, rho_in)
    res = P.feasibility(ch, target)
    assert res.feasible
    B = P.gell_mann_basis(d)
    lhs = [np.trace(c.dual_apply(ch, F) @ res.state.matrix) for F in B]
    np.testing.assert_allclose(lhs, B.coefficients(target.matrix), atol=1e-7)


# -- fidelity ------------------------------------------------------------------


def test_max_fidelity_pure_examples():
    F, rho = P.max_fidelity_pure(c.identity_channel(2), [0.6, 0.8j])
    assert F == pytest.approx(1.0)
    F, rho = P.max_fidelity_pure(PAULI_CH, [1, 0])
    assert F == pytest.approx(np.sqrt(0.8), abs=1e-12)
    np.testing.assert_allclose(rho.matrix, np.diag([1, 0]), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        P.max_fidelity_pure(PAULI_CH, [1, 0, 0])


@pytest.mark.parametrize("p", np.linspace(0, 0.75, 7))
def test_max_fidelity_pure_depolarizing(p):
    F, _ = P.max_fidelity_pure(c.depolarizing(p), [1, 0])
    assert F == pytest.approx(np.sqrt(1 - 2 * p / 3), abs=1e-12)


def test_max_fidelity_identity():
    rho = c.random_density(3, seed=9)
    F, rho_in = P.max_fidelity(c.identity_channel(3), rho)
    assert F == pytest.approx(1.0, abs=1e-6)


def test_max_fidelity_pure_target_matches_shortcut():
    F, rho_in = P.max_fidelity(PAULI_CH, np.diag([1.0, 0.0]))
    assert F == pytest.approx(np.sqrt(0.8), abs=1e-6)
    assert c.fidelity(np.diag([1.0, 0.0]), c.apply(PAULI_CH, rho_in)) == pytest.approx(F, abs=1e-6)


def _qubit_fidelity(r, s):
    """Fidelity of two qubit states from Bloch vectors, vectorized over ``s``."""
    tr = (1 + s @ r) / 2
    det = np.sqrt(np.clip((1 - r @ r) * (1 - np.sum(s * s, axis=-1)), 0, None)) / 2
    return np.sqrt(np.clip(tr + det, 0, None))


def test_max_fidelity_mixed_target_against_grid_search():
    r = np.array([0.0, 0.0, 0.8])
    F, rho_in = P.max_fidelity(PAULI_CH, c.from_bloch(r))
    closed = (np.sqrt(1.8 * 1.6) + np.sqrt(0.2 * 0.4)) / 2
    assert F == pytest.approx(closed, abs=1e-6)
    np.testing.assert_allclose(c.to_bloch(rho_in.matrix), [0, 0, 1], atol=1e-3)
    # the channel is covariant under rotations about z: scan the (x, z) disk at 1e-3
    x, z = np.meshgrid(np.arange(0, 1.0005, 1e-3), np.arange(-1, 1.0005, 1e-3))
    inside = x**2 + z**2 <= 1
    R = np.stack([x[inside], np.zeros(inside.sum()), z[inside]], axis=1)
    assert _qubit_fidelity(r, 0.6 * R).max() <= F + 1e-6


@given(seeds, st.integers(2, 3))
def test_max_fidelity_certified_by_direct_fidelity(seed, d):
    rng = np.random.default_rng(seed)
    ch = c.random_channel(d, 2, rng)
    target = c.random_density(d, seed=rng)
    F, rho_in = P.max_fidelity(ch, target)
    assert F == pytest.approx(c.fidelity(target, c.apply(ch, rho_in)), abs=1e-6)
    # no random input beats the optimum
    for _ in range(20):
        trial = c.random_density(d, seed=rng)
        assert c.fidelity(target, c.apply(ch, trial)) <= F + 1e-6


@given(seeds, st.integers(2, 3))
def test_max_fidelity_pure_targets_cross_validate(seed, d):
    rng = np.random.default_rng(seed)
    ch = c.random_channel(d, 2, rng)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    psi /= np.linalg.norm(psi)
    F_sdp, _ = P.max_fidelity(ch, np.outer(psi, psi.conj()))
    F_eig, _ = P.max_fidelity_pure(ch, psi)
    assert F_sdp == pytest.approx(F_eig, abs=1e-6)


def test_feasible_implies_perfect_fidelity_and_converse_off_boundary():
    rng = np.random.default_rng(11)
    ch = c.random_channel(2, 2, rng)
    targets = [c.random_density(2, "bloch-ball-uniform", rng) for _ in range(300)]
    feas = P.feasibility_batch(ch, targets)
    fids, _, _ = P.max_fidelity_batch(ch, targets)
    for f, F in zip(feas, fids):
        if f.feasible:
            assert F >= 1 - 1e-6
        elif f.t_star > 1e-2:
            # 1 - F grows quadratically in the distance to the boundary
            assert F < 1 - 1e-6


def test_max_fidelity_batch_groups_by_rank():
    pure = np.diag([1.0, 0.0])
    mixed = np.diag([0.7, 0.3])
    fids, states, batches = P.max_fidelity_batch(PAULI_CH, [pure, mixed, pure])
    assert sorted(batches) == [1, 2]
    assert fids[0] == pytest.approx(fids[2])
    assert all(s.dim == 2 for s in states)


def test_max_fidelity_dimension_check():
    with pytest.raises(DimensionMismatch):
        P.max_fidelity(PAULI_CH, np.eye(3) / 3)
    with pytest.raises(ValueError):
        P.max_fidelity_problem(PAULI_CH, 3)


@pytest.mark.parametrize("gap", [6.5e-7, 1e-9, 1e-11])
def test_near_pure_full_rank_targets(gap):
    # smallest eigenvalue ~ gap/2 sits above the support cutoff
    ch = c.PauliChannelParams((0.7, 0.1, 0.1, 0.1)).channel()
    n = np.array([0.69038098, 0.40989743, 0.59611819])
    target = c.from_bloch((1 - gap) * n / np.linalg.norm(n))
    F, rho_in = P.max_fidelity(ch, target)
    assert F == pytest.approx(c.fidelity(c.apply(ch, rho_in), target), abs=1e-8)
    assert F == pytest.approx(np.sqrt(0.8), abs=1e-3)
