import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cavitycnot.darkstates import (
    DarkFamily,
    block7_states,
    block_dimensions,
    dark_family,
    dark_phi7_3,
    dark_phi16,
    dark_sti,
    expected_connection,
    expected_path,
    geometric_couplings,
    kernel_overlap,
    numeric_kernel,
    step_amplitudes,
    step_dark_states,
    verify_step,
)
from cavitycnot.hamiltonian import CavityParams, interaction_hamiltonian, step_hamiltonian
from cavitycnot.pulses import active_couplings, build_cnot_protocol
from cavitycnot.statespace import AtomLevel, HilbertSpace, ket, restrict

G0, GA, G1 = AtomLevel.G0, AtomLevel.GA, AtomLevel.G1
CAV = CavityParams.symmetric(25.0)


def coeffs_on(space, vec, states):
    return np.array([vec[space.index_of(s)] for s in states])


def test_dark_sti_examples():
    np.testing.assert_allclose(dark_sti(1.0, 1.0, math.pi), [1 / math.sqrt(2)] * 2)
    np.testing.assert_allclose(dark_sti(2.0, 0.0, 0.7), [1, 0])
    np.testing.assert_allclose(dark_sti(0.0, 2.0, 0.0), [0, -1])
    with pytest.raises(ValueError):
        dark_sti(0.0, 0.0, 0.0)


def test_phi7_3_symmetric(space):
    w, g = 3.0, 5.0
    v = dark_phi7_3(space, w, w, g, g, GA, G0)
    states = [ket("a1"), ket("10"), ket("11", 1)]
    want = np.array([g * w, g * w, -(w**2)]) / math.sqrt(2 * g**2 * w**2 + w**4)
    np.testing.assert_allclose(coeffs_on(space, v, states), want)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_phi7_3_limits(space):
    np.testing.assert_allclose(dark_phi7_3(space, 1.0, 0.0, 2.0, 2.0, GA, G0), space.basis_vector(ket("10")))
    np.testing.assert_allclose(dark_phi7_3(space, 0.0, 1.0, 2.0, 2.0, GA, G0), space.basis_vector(ket("a1")))
    with pytest.raises(ValueError):
        dark_phi7_3(space, 0.0, 0.0, 0.0, 0.0, GA, G0)


def test_phi7_3_in_numeric_kernel_of_chain(space, protocol):
    H = step_hamiltonian(space, protocol.step(2), CavityParams(1.7, 2.3), 0.8, 1.9)
    chain = [ket("10"), ket("1e"), ket("11", 1), ket("e1"), ket("a1")]
    kernel = numeric_kernel(restrict(H, space, chain))
    assert kernel.shape[1] == 1
    phi = restrict(dark_phi7_3(space, 0.8, 1.9, 1.7, 2.3, GA, G0), space, chain)
    assert abs(np.vdot(kernel[:, 0], phi)) == pytest.approx(1.0, abs=1e-12)


def test_phi16_examples(space):
    np.testing.assert_allclose(dark_phi16(space, 4, 1.0, 2.0, 3.0, 4.0, GA, G0), space.basis_vector(ket("0a")))
    v = dark_phi16(space, 2, 1.0, 0.0, 3.0, 4.0, GA, G0)
    assert abs(v[space.index_of(ket("00"))]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        dark_phi16(space, 6, 1.0, 1.0, 1.0, 1.0, GA, G0)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(0.05, 20),
    st.floats(0.05, 20),
    st.floats(0.05, 50),
    st.floats(0.05, 50),
    st.sampled_from([2, 3, 4, 5]),
)
def test_phi16_residual_random(w1, w2, g1, g2, k):
    space = HilbertSpace(2)
    for step in build_cnot_protocol().steps[1:5]:
        l1, l2 = step.laser_levels
        H = step_hamiltonian(space, step, CavityParams(g1, g2), w1, w2)
        v = dark_phi16(space, k, w1, w2, g1, g2, l1, l2)
        assert np.linalg.norm(H @ v) <= 1e-12 * np.linalg.norm(H, 2)


def test_phi16_5_has_two_photon_component(space):
    v = dark_phi16(space, 5, 1.0, 1.0, 2.0, 2.0, GA, G0)
    assert abs(v[space.index_of(ket("11", 2))]) > 0


def test_numeric_kernel_examples(space, protocol):
    assert numeric_kernel(np.zeros((5, 5))).shape == (5, 5)
    step = protocol.step(2)
    H = step_hamiltonian(space, step, CAV, 4.0, 7.0)
    block = block7_states(*step.laser_levels)
    kernel = numeric_kernel(restrict(H, space, block))
    assert kernel.shape[1] == 3
    phi = restrict(dark_phi7_3(space, 4.0, 7.0, 25.0, 25.0, GA, G0), space, block)
    assert kernel_overlap(phi, kernel) >= 1 - 1e-10


@pytest.mark.parametrize("index", range(1, 7))
def test_dark_states_annihilated_and_ground_only(space, index):
    sched = build_cnot_protocol(phases=(0.3, -1.1, 2.0, 0.4, -0.2, 1.5))
    step = sched.step(index)
    for t in np.linspace(*step.window, 25):
        # floor=0 keeps the same pulse tails that step_amplitudes sees
        H = interaction_hamiltonian(space, active_couplings(sched, t, floor=0.0), CAV)
        scale = np.linalg.norm(H, 2)
        for name, v in step_dark_states(space, step, CAV, *step_amplitudes(step, t)).items():
            assert np.linalg.norm(H @ v) <= 1e-10 * scale, (name, t)
            assert not np.any(v[space.excited_mask]), name


def test_photon_suppression_formula(space):
    w = 1.0
    for g in (2.0, 4.0, 8.0):
        p = abs(dark_phi7_3(space, w, w, g, g, GA, G0)[space.index_of(ket("11", 1))]) ** 2
        assert p == pytest.approx(w**2 / (2 * g**2 + w**2))
    p1 = abs(dark_phi7_3(space, w, w, 4.0, 4.0, GA, G0)[space.index_of(ket("11", 1))]) ** 2
    p2 = abs(dark_phi7_3(space, w, w, 8.0, 8.0, GA, G0)[space.index_of(ket("11", 1))]) ** 2
    assert 3.5 <= p1 / p2 <= 4.5


def test_geometric_constant_family_is_zero():
    t = np.linspace(0, 1, 51)
    vecs = np.tile(np.eye(4)[:, :2], (t.size, 1, 1)).astype(complex)
    res = geometric_couplings(DarkFamily(t, vecs))
    assert res.max == 0.0
    assert res.converged


def test_geometric_detects_rotation():
    # two orthonormal vectors rotated at angular speed 2: coupling is exactly 2
    t = np.linspace(0, 1, 401)
    c, s = np.cos(2 * t), np.sin(2 * t)
    vecs = np.zeros((t.size, 3, 2), dtype=complex)
    vecs[:, 0, 0], vecs[:, 1, 0] = c, s
    vecs[:, 0, 1], vecs[:, 1, 1] = -s, c
    res = geometric_couplings(DarkFamily(t, vecs))
    assert res.matrix[0, 1] == pytest.approx(2.0, rel=1e-4)
    assert res.matrix[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert res.converged


def test_geometric_gauge_removes_random_phases():
    rng = np.random.default_rng(3)
    t = np.linspace(0, 1, 201)
    vecs = np.zeros((t.size, 2, 1), dtype=complex)
    vecs[:, 0, 0] = np.exp(1j * rng.uniform(0, 2 * np.pi, t.size))
    res = geometric_couplings(DarkFamily(t, vecs))
    assert res.max < 1e-12


def test_geometric_flags_coarse_grid():
    t = np.linspace(0, 1, 9)
    phase = 40 * t
    vecs = np.zeros((t.size, 2, 2), dtype=complex)
    vecs[:, 0, 0], vecs[:, 1, 0] = np.cos(phase), np.sin(phase)
    vecs[:, 0, 1], vecs[:, 1, 1] = -np.sin(phase), np.cos(phase)
    assert not geometric_couplings(DarkFamily(t, vecs)).converged


def test_protocol_family_has_no_geometric_coupling(space):
    sched = build_cnot_protocol(phases=(0.5, 1.0, -0.7, 2.2, 0.1, -1.4))
    for step in sched.steps:
        fam = dark_family(space, step, CAV, np.linspace(*step.window, 801))
        res = geometric_couplings(fam)
        assert res.max <= 1e-8
        assert res.converged
        np.testing.assert_allclose(np.diag(res.matrix), 0.0, atol=1e-12)


def test_expected_connections(protocol):
    s2, s5 = protocol.step(2), protocol.step(5)
    assert expected_connection(s2, ket("10")).state == ket("a1")
    assert expected_connection(s5, ket("01")).state == ket("10")
    spect = expected_connection(s2, ket("11"))
    assert spect.state == ket("11") and spect.spectator
    s1 = expected_connection(protocol.step(1), ket("11"))
    assert s1.state == ket("1a") and not s1.spectator
    assert s1.phase == pytest.approx(1.0)  # -exp(i*pi)


def test_expected_path_is_cnot(space, protocol):
    for src, dst in (("00", "00"), ("01", "01"), ("10", "11"), ("11", "10")):
        path = expected_path(protocol, space, space.basis_vector(ket(src)))
        assert abs(path[-1][space.index_of(ket(dst))]) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        expected_path(protocol, space, space.basis_vector(ket("0e")))


def test_verify_step_and_blocks(space, protocol):
    for step in protocol.steps:
        assert verify_step(space, protocol, step, CAV, n_samples=101).ok()
    dims = block_dimensions(space, protocol.step(2), CavityParams.symmetric(2.0))
    assert {k: len(v) for k, v in dims.items()} == {"H1": 1, "H7": 7, "H16": 16}
    assert ket("a1") in dims["H7"] and ket("a0") not in dims["H7"]
