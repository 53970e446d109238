import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qepc import channels, vectorize as vz

from conftest import dims, random_complex, seeds


@given(seeds, dims)
def test_vec_matches_entangled_state_definition(seed, d):
    A = random_complex(np.random.default_rng(seed), d, d)
    np.testing.assert_allclose(vz.vec(A), vz.vec_by_entangled_state(A), atol=1e-14)


@given(seeds, dims)
def test_devec_inverts_vec_both_ways(seed, d):
    A = random_complex(np.random.default_rng(seed), d, d)
    v = vz.vec(A)
    np.testing.assert_array_equal(vz.devec(v), A)
    np.testing.assert_allclose(vz.devec_partial_trace(v), A, atol=1e-14)


def test_vec_is_row_stacking():
    A = np.arange(4).reshape(2, 2)
    np.testing.assert_array_equal(vz.vec(A), [0, 1, 2, 3])


def test_devec_rejects_non_square_length():
    with pytest.raises(ValueError):
        vz.devec(np.zeros(5))


@given(seeds, dims, st.integers(1, 4))
def test_transfer_matrix_identity(seed, d, k):
    rng = np.random.default_rng(seed)
    ch = channels.random_channel(d, k, rng)
    rho = channels.random_density(d, seed=rng)
    assert vz.vec_identity_check(ch.kraus, rho.matrix) <= 1e-12


@given(seeds, dims)
def test_transfer_matrix_acts_on_arbitrary_matrices(seed, d):
    """Linearity: the identity is not specific to states."""
    rng = np.random.default_rng(seed)
    ch = channels.random_channel(d, 2, rng)
    X = random_complex(rng, d, d)
    M = vz.transfer_from_kraus(ch.kraus)
    np.testing.assert_allclose(M @ vz.vec(X), vz.vec(ch.apply_matrix(X)), atol=1e-12)


@pytest.mark.parametrize("d_a,d_b", [(1, 2), (2, 2), (2, 3), (3, 3)])
def test_bipartite_vec_is_row_stacking(d_a, d_b):
    perm = vz.bipartite_index_permutation(d_a, d_b)
    np.testing.assert_array_equal(perm, np.arange((d_a * d_b) ** 2))


@given(seeds)
def test_bipartite_round_trip(seed):
    rng = np.random.default_rng(seed)
    H = random_complex(rng, 6, 6)
    v = vz.bipartite_vec(H, 2, 3)
    np.testing.assert_allclose(v, vz.vec(H), atol=1e-14)
    np.testing.assert_allclose(vz.bipartite_devec(v, 2, 3), H, atol=1e-14)


@given(seeds)
def test_extended_channel_transfer_matrix(seed):
    """M of 1_A x E is the subsystem-ordered sum of 1 x A_i x 1 x A_i*."""
    rng = np.random.default_rng(seed)
    ch = channels.random_channel(3, 2, rng)
    ext = channels.extend_bipartite(ch, 2)
    eye = np.eye(2)
    ordered = sum(np.kron(np.kron(eye, K), np.kron(eye, K.conj())) for K in ch.kraus)
    np.testing.assert_allclose(vz.transfer_from_kraus(ext.kraus), ordered, atol=1e-14)
