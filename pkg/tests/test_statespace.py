import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitycnot.statespace import (
    COMPUTATIONAL_STATES,
    EXCITED_LEVELS,
    GROUND_LEVELS,
    AtomLevel,
    BasisState,
    HilbertSpace,
    annihilation,
    atomic_transition,
    build_space,
    check_density_matrix,
    check_state,
    embed,
    ket,
    photon_number,
    projector,
    restrict,
    to_density_matrix,
)


def test_five_levels_split_into_ground_and_excited():
    assert len(AtomLevel) == 5
    assert set(GROUND_LEVELS) | set(EXCITED_LEVELS) == set(AtomLevel)
    assert all(l.is_ground for l in GROUND_LEVELS)
    assert all(l.is_excited for l in EXCITED_LEVELS)
    assert AtomLevel.from_symbol("a") is AtomLevel.GA
    with pytest.raises(ValueError):
        AtomLevel.from_symbol("x")


@pytest.mark.parametrize("n_max, dim", [(2, 75), (3, 100), (5, 150)])
def test_dimension(n_max, dim):
    assert build_space(n_max).dim == dim


@pytest.mark.parametrize("n_max", [0, 1])
def test_small_truncation_rejected(n_max):
    with pytest.raises(ValueError, match=r"\|11>\|2>"):
        build_space(n_max)


def test_ordering_is_lexicographic(space):
    assert space.state_at(0) == BasisState(AtomLevel.G0, AtomLevel.G0, 0)
    assert space.state_at(1) == BasisState(AtomLevel.G0, AtomLevel.G0, 1)
    assert space.state_at(4) == BasisState(AtomLevel.G0, AtomLevel.GA, 0)
    assert space.state_at(space.dim - 1) == BasisState(AtomLevel.U, AtomLevel.U, 3)
    assert list(space.states) == sorted(
        space.states, key=lambda s: (s.atom1.index, s.atom2.index, s.photons)
    )


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.data())
def test_index_round_trip(n_max, data):
    space = HilbertSpace(n_max)
    i = data.draw(st.integers(0, space.dim - 1))
    assert space.index_of(space.state_at(i)) == i


def test_index_of_rejects_photons_beyond_truncation(space):
    with pytest.raises(ValueError):
        space.index_of(ket("00", 4))


def test_ket_labels():
    assert ket("1a", 2).label == "|1a>|2>"
    assert str(ket("00")) == "|00>|0>"
    with pytest.raises(ValueError):
        ket("000")


def test_annihilation_ladder(space):
    a = annihilation(space)
    i = lambda s: space.index_of(s)
    assert a[i(ket("1a", 0)), i(ket("1a", 1))] == 1
    assert np.isclose(a[i(ket("e0", 1)), i(ket("e0", 2))], np.sqrt(2))
    for s in space.states:
        if s.photons == 0:
            assert not np.any(a @ space.basis_vector(s))


def test_commutator_below_truncation_edge(space):
    a = annihilation(space)
    comm = a @ a.conj().T - a.conj().T @ a
    keep = space.photon_numbers < space.n_max
    np.testing.assert_allclose(comm[np.ix_(keep, keep)], np.eye(keep.sum()), atol=1e-14)
    # at the edge the truncated commutator is -n_max, not 1
    edge = ~keep
    np.testing.assert_allclose(np.diag(comm)[edge], -space.n_max)


def test_photon_number_is_diagonal(space):
    n = photon_number(space)
    np.testing.assert_allclose(np.diag(n), space.photon_numbers)
    assert np.count_nonzero(n - np.diag(np.diag(n))) == 0


def test_atomic_transition_sparsity_and_algebra(space):
    op = atomic_transition(space, 1, AtomLevel.E, AtomLevel.G0)
    assert np.count_nonzero(op) == 5 * space.n_fock
    assert set(np.unique(op[op != 0])) == {1}
    assert not np.any(op @ op)
    eig = np.linalg.eigvalsh(op + op.conj().T)
    assert np.all(np.isclose(eig[:, None], [-1, 0, 1]).any(axis=1))


def test_atomic_transition_acts_on_chosen_atom(space):
    op = atomic_transition(space, 2, AtomLevel.U, AtomLevel.GA)
    out = op @ space.basis_vector(ket("1a", 1))
    np.testing.assert_array_equal(out, space.basis_vector(ket("1u", 1)))


@pytest.mark.parametrize(
    "upper, lower",
    [(AtomLevel.G0, AtomLevel.GA), (AtomLevel.E, AtomLevel.U), (AtomLevel.E, AtomLevel.E)],
)
def test_atomic_transition_rejects_bad_pairs(space, upper, lower):
    with pytest.raises(ValueError):
        atomic_transition(space, 1, upper, lower)


def test_atomic_transition_rejects_bad_atom(space):
    with pytest.raises(ValueError):
        atomic_transition(space, 3, AtomLevel.E, AtomLevel.G0)


def test_restrict_identity(space):
    subset = [space.state_at(i) for i in (3, 17, 40, 41, 60, 77, 99)]
    np.testing.assert_array_equal(restrict(space.identity(), space, subset), np.eye(7))


def test_restrict_then_embed(space):
    rng = np.random.default_rng(0)
    subset = list(COMPUTATIONAL_STATES)
    psi = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    back = embed(restrict(psi, space, subset), space, subset)
    idx = space.indices(subset)
    np.testing.assert_array_equal(back[idx], psi[idx])
    assert np.count_nonzero(back) == 4
    np.testing.assert_array_equal(restrict(back, space, subset), restrict(psi, space, subset))


def test_restrict_rejects_duplicates_and_out_of_range(space):
    with pytest.raises(ValueError):
        restrict(space.identity(), space, [ket("00"), ket("00")])
    with pytest.raises(ValueError):
        restrict(space.identity(), space, [ket("00", 7)])


def test_projector(space):
    p = projector(space, [ket("00"), ket("11")])
    np.testing.assert_array_equal(p @ p, p)
    assert np.trace(p).real == 2


def test_state_checks(space):
    psi = space.superposition({ket("00"): 1, ket("11"): 1j})
    check_state(psi, space)
    with pytest.raises(ValueError):
        check_state(2 * psi, space)
    rho = to_density_matrix(psi)
    check_density_matrix(rho, space)
    with pytest.raises(ValueError):
        check_density_matrix(rho + 0.1 * space.identity(), space)
    bad = rho.copy()
    bad[0, 1] += 0.3
    with pytest.raises(ValueError):
        check_density_matrix(bad, space)
