import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qepc import channels as c
from qepc import experiments as ex
from qepc import precomp as pc
from qepc.errors import DimensionMismatch, InvalidStateError
from qepc.sdp.programs import feasibility

from conftest import seeds

PAULI = c.PauliChannelParams((0.7, 0.1, 0.1, 0.1))
FULL_DEP = c.PauliChannelParams((0.25,) * 4)


def random_pauli_instance(rng):
    """Pauli parameters (sometimes with vanishing q_k) and a qubit target."""
    kind = rng.integers(3)
    if kind == 0:
        p = rng.dirichlet(np.ones(4))
    elif kind == 1:
        a, b = rng.dirichlet(np.ones(2)) / 2
        p = np.array([a, a, b, b])[rng.permutation(4)]
    else:
        p = np.full(4, 0.25)
    params = c.PauliChannelParams(tuple(p / p.sum()))
    r = rng.standard_normal(3)
    r *= rng.uniform(0, 1) ** (1 / 3) / np.linalg.norm(r)
    q = params.q[1:]
    if rng.random() < 0.7:
        r[np.abs(q) < 1e-12] = 0.0
    return params, c.from_bloch(r)


def test_identity_channel_unique():
    rho = c.random_density(3, seed=1)
    res = pc.solve_exact(c.identity_channel(3), rho)
    assert isinstance(res, pc.Unique) and res.case == "1a"
    np.testing.assert_allclose(res.rho_in.matrix, rho.matrix, atol=1e-12)
    assert res.residual <= 1e-12


def test_pauli_case_1a():
    res = pc.solve_exact(PAULI.channel(), c.from_bloch([0.3, 0, 0]))
    assert res.case == "1a"
    np.testing.assert_allclose(c.to_bloch(res.rho_in.matrix), [0.5, 0, 0], atol=1e-12)


def test_pauli_case_1b_certificate():
    res = pc.solve_exact(PAULI.channel(), c.from_bloch([0.9, 0, 0]))
    assert isinstance(res, pc.Infeasible) and res.case == "1b"
    assert res.reason is pc.InfeasibleReason.CANDIDATE_NOT_PSD
    assert np.linalg.norm(c.to_bloch(res.candidate)) == pytest.approx(1.5)
    assert res.certificate == pytest.approx(-0.25)
    assert not res.feasible and res.state is None


def test_fully_depolarizing_family():
    res = pc.solve_exact(FULL_DEP.channel(), np.eye(2) / 2)
    assert isinstance(res, pc.Family) and res.case == "2b"
    assert res.kernel_basis.shape == (4, 3)
    np.testing.assert_allclose(res.particular, np.eye(2) / 2, atol=1e-12)
    assert res.psd_member is not None


def test_fully_depolarizing_not_in_range():
    res = pc.solve_exact(FULL_DEP.channel(), c.from_bloch([0, 0.3, 0]))
    assert res.case == "2a" and res.reason is pc.InfeasibleReason.NOT_IN_RANGE
    assert res.certificate == pytest.approx(0.3 / np.sqrt(2))


@given(seeds)
def test_family_members_solve_the_linear_system(seed):
    rng = np.random.default_rng(seed)
    params = c.PauliChannelParams((0.5, 0.5, 0.0, 0.0))
    res = pc.solve_exact(params.channel(), c.from_bloch([rng.uniform(-1, 1), 0, 0]))
    assert isinstance(res, pc.Family)
    M = c.transfer_matrix(params.channel()).matrix
    coeffs = rng.standard_normal(res.kernel_basis.shape[1]) + 1j * rng.standard_normal(res.kernel_basis.shape[1])
    v = res.particular.reshape(-1) + res.kernel_basis @ coeffs
    target = M @ res.particular.reshape(-1)
    assert np.linalg.norm(M @ v - target) <= 1e-8
    np.testing.assert_allclose(res.kernel_basis.conj().T @ res.kernel_basis, np.eye(2), atol=1e-12)


def test_family_without_psd_member():
    # q = (1, 0, 0): r_1 = 1 is reachable only by the pure input, r_1 > 1 impossible
    params = c.PauliChannelParams((0.5, 0.5, 0.0, 0.0))
    res = pc.pauli_qubit_analytic(params, c.from_bloch([1.0, 0, 0]))
    assert res.feasible
    # a non-PSD minimal-norm member cannot occur for this channel; build one by hand
    shrink = c.PauliChannelParams((0.4, 0.4, 0.1, 0.1))  # q = (1, 0.6, 0, 0)
    res = pc.solve_exact(shrink.channel(), c.from_bloch([0.9, 0, 0]))
    assert isinstance(res, pc.Family) and res.psd_member is None and not res.feasible
    np.testing.assert_allclose(c.to_bloch(res.particular), [1.5, 0, 0], atol=1e-9)


def test_pauli_analytic_examples():
    res = pc.pauli_qubit_analytic(PAULI, c.from_bloch([0.6, 0, 0]))
    assert res.case == "1a"
    np.testing.assert_allclose(c.to_bloch(res.rho_in.matrix), [1, 0, 0], atol=1e-12)
    half = c.PauliChannelParams((0.5, 0.5, 0.0, 0.0))
    np.testing.assert_allclose(half.q, [1, 1, 0, 0])
    res = pc.pauli_qubit_analytic(half, c.from_bloch([0.4, 0, 0]))
    assert isinstance(res, pc.Family)
    np.testing.assert_allclose(c.to_bloch(res.particular), [0.4, 0, 0], atol=1e-12)
    assert res.kernel_basis.shape == (4, 2)
    res = pc.pauli_qubit_analytic(half, c.from_bloch([0, 0.2, 0]))
    assert res.case == "2a"


def _kernel_projector(K):
    return K @ K.conj().T


@pytest.mark.slow
def test_pauli_analytic_agrees_with_svd_path():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        params, target = random_pauli_instance(rng)
        a = pc.pauli_qubit_analytic(params, target)
        b = pc.solve_exact(params.channel(), target)
        assert a.case == b.case
        assert a.feasible == b.feasible
        if isinstance(a, pc.Unique):
            np.testing.assert_allclose(a.rho_in.matrix, b.rho_in.matrix, atol=1e-9)
        if isinstance(a, pc.Family):
            np.testing.assert_allclose(a.particular, b.particular, atol=1e-9)
            np.testing.assert_allclose(_kernel_projector(a.kernel_basis),
                                       _kernel_projector(b.kernel_basis), atol=1e-9)


@pytest.mark.slow
def test_classification_agrees_with_sdp_on_random_pauli_channels():
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(1000):
        params, target = random_pauli_instance(rng)
        q = params.q[1:]
        r = c.to_bloch(target.matrix)
        live = np.abs(q) > 1e-10
        if abs(np.linalg.norm(r[live] / q[live]) - 1) <= 1e-6:
            continue
        exact = pc.solve_exact(params.channel(), target)
        assert exact.feasible == feasibility(params.channel(), target).feasible
        checked += 1
    assert checked > 900


@given(seeds)
def test_feasible_results_round_trip(seed):
    params, target = random_pauli_instance(np.random.default_rng(seed))
    res = pc.solve_exact(params.channel(), target)
    if res.feasible:
        assert c.fidelity(c.apply(params.channel(), res.state), target) >= 1 - 1e-7


@given(seeds, st.integers(2, 4))
def test_invertible_candidate_has_unit_trace(seed, d):
    rng = np.random.default_rng(seed)
    ch = c.random_channel(d, 2, rng)
    rho_in = c.random_density(d, seed=rng)
    res = pc.solve_exact(ch, c.apply(ch, rho_in))
    if c.transfer_matrix(ch).is_invertible:
        assert res.case == "1a"
        assert np.trace(res.rho_in.matrix).real == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(res.rho_in.matrix, rho_in.matrix, atol=1e-6)


def test_boundary_candidates_are_clipped():
    # exact boundary: R = (1, 0, 0) is pure
    res = pc.solve_exact(PAULI.channel(), c.from_bloch([0.6, 0, 0]))
    assert res.case == "1a"
    assert np.linalg.eigvalsh(res.rho_in.matrix)[0] >= 0


def test_bipartite_example_matches_closed_form():
    ch = c.amplitude_damping_qutrit(0.2)
    res = pc.solve_exact_bipartite(ch, 3, ex.example2_target(0.3))
    expected, valid = ex.example2_closed_form(0.2, 0.3)
    assert valid and res.case == "1a"
    np.testing.assert_allclose(res.rho_in.matrix, expected, atol=1e-8)


def test_bipartite_full_damping_not_in_range():
    res = pc.solve_exact_bipartite(c.amplitude_damping_qutrit(1.0), 3, ex.example2_target(0.3))
    assert res.case == "2a"


@given(seeds)
def test_bipartite_with_trivial_a_is_single_system(seed):
    rng = np.random.default_rng(seed)
    ch = c.random_channel(2, 2, rng)
    target = c.apply(ch, c.random_density(2, seed=rng))
    a = pc.solve_exact_bipartite(ch, 1, target)
    b = pc.solve_exact(ch, target)
    assert a.case == b.case
    if a.feasible:
        np.testing.assert_allclose(a.state.matrix, b.state.matrix, atol=1e-12)


def test_solve_exact_many_matches_single_calls():
    rng = np.random.default_rng(3)
    targets = [c.random_density(2, "bloch-ball-uniform", rng) for _ in range(20)]
    for params in (PAULI, c.PauliChannelParams((0.5, 0.5, 0, 0)), FULL_DEP):
        many = pc.solve_exact_many(params.channel(), targets)
        for t, m in zip(targets, many):
            assert m.case == pc.solve_exact(params.channel(), t).case


def test_input_validation():
    with pytest.raises(DimensionMismatch):
        pc.solve_exact(c.identity_channel(3), np.eye(2) / 2)
    with pytest.raises(InvalidStateError):
        pc.solve_exact(c.identity_channel(2), np.eye(2))
