import cmath
import itertools
import math

import numpy as np
import pytest

from linsub.applications import (KerrTarget, PermutationSpec, fidelity, high_transmittance_k,
                                 kerr_nodes, kerr_second_coupler, kerr_stage, kerr_stage_coefficients,
                                 kerr_stage_network, kerr_target_operator, multiphoton_norm,
                                 multiphoton_schedule, multiphoton_target, n_mode_mirror,
                                 prep_multiphoton, synthesize_cross_kerr, teleport_identity)
from linsub.errors import DimensionError, DomainError
from linsub.fock import FockSpace, annihilation, fock_state, headroom_mask
from linsub.synthesis import JointDevice

import oracles


def test_fidelity_is_one_for_scaled_unitary():
    u = np.diag([1, 1j, -1, 1]).astype(complex)
    assert fidelity(u, 0.3j * u) == pytest.approx(1.0)
    assert fidelity(u, np.eye(4)) < 1
    assert fidelity(u, np.zeros((4, 4))) == 0.0
    assert oracles.cz_fidelity(np.diag([1, 1, 1, -1]) * 2.0) == pytest.approx(1.0)


def test_kerr_target_validation():
    with pytest.raises(DomainError):
        KerrTarget(0.0, 1)
    with pytest.raises(DomainError):
        KerrTarget(1.0, -1)
    with pytest.raises(DomainError):
        KerrTarget(1.0, 1, 0)
    t = KerrTarget(math.pi, 1)
    b = t.first_coupler()
    assert abs(b.T / b.R) ** 2 == pytest.approx(t.gamma) == pytest.approx(2.0)


def test_high_transmittance_k():
    assert high_transmittance_k(math.pi) == 1
    assert high_transmittance_k(3 * math.pi) == 2
    assert high_transmittance_k(2 * math.pi) == 1


@pytest.mark.parametrize("seed", range(3))
def test_kerr_stage_closed_form_matches_network(seed):
    rng = np.random.default_rng(seed)
    t1 = rng.uniform(0.3, 1.2)
    T1, R1 = math.cos(t1) * cmath.exp(1j * rng.uniform(-1, 1)), math.sin(t1)
    xi = 0.4 * cmath.exp(1j * rng.uniform(-3, 3))
    b2 = kerr_second_coupler(T1, R1, xi, complex(*rng.normal(size=2)))
    closed, alpha, beta, gamma = kerr_stage(T1, R1, b2.T, b2.R, xi)
    sim = kerr_stage_network(T1, R1, b2.T, b2.R, xi)
    mask = headroom_mask(FockSpace((3, 3)), 2)
    assert np.max(np.abs(sim.entries[:, mask] - closed.entries[:, mask])) < 1e-13


def test_kerr_second_coupler_realises_beta():
    T1, R1, xi = 0.8, 0.6, 0.5 - 0.2j
    for beta in (1.0, -2.0 + 1j, 0.1j):
        b2 = kerr_second_coupler(T1, R1, xi, beta)
        _, b, _ = kerr_stage_coefficients(T1, R1, b2.T, b2.R, xi)
        assert b == pytest.approx(beta)
    with pytest.raises(DomainError):
        kerr_stage_coefficients(T1, R1, 1.0, 0.0, xi)


def test_kerr_nodes_rational_and_irrational_gamma():
    # gamma = 2: (n1 - 2)(n0 - 2) over {0,1,2}^2 takes the values 0, 1, 2, 4
    assert np.allclose(kerr_nodes(2.0, 2), [0, 1, 2, 4])
    # gamma = 2 pi: six distinct products, symmetric in n0 <-> n1
    assert kerr_nodes(2 * math.pi, 2).size == 6
    assert kerr_nodes(2 * math.pi, 1).size == 3


@pytest.mark.parametrize("phi,M", [(math.pi, 1), (math.pi, 2), (1.0, 2), (-math.pi / 2, 1)])
def test_cross_kerr_synthesis(phi, M):
    sched, y = synthesize_cross_kerr(KerrTarget(phi, M))
    u = kerr_target_operator(phi, M)
    assert fidelity(u, y) >= 1 - 1e-10
    assert np.allclose(np.abs(np.diag(y.entries)), abs(sched.prefactor), rtol=1e-9)
    assert sched.meta["N"] == len(sched.meta["nodes"]) - 1


def test_cross_kerr_without_compensation_keeps_attenuation():
    target = KerrTarget(math.pi, 1)
    sched, y = synthesize_cross_kerr(target, compensate=False)
    occ = y.in_space.occupations
    T1 = target.first_coupler().T
    N = sched.meta["N"]
    ref = np.exp(1j * math.pi * occ[:, 0] * occ[:, 1]) * T1 ** (N * (occ[:, 0] + occ[:, 1]))
    ratio = np.diag(y.entries) / ref
    assert np.allclose(ratio, ratio[0], rtol=1e-10)
    assert fidelity(kerr_target_operator(math.pi, 1), y) < 0.99


def test_cross_kerr_probability_is_input_independent():
    sched, y = synthesize_cross_kerr(KerrTarget(math.pi, 1))
    rng = np.random.default_rng(0)
    ps = []
    for _ in range(10):
        v = rng.normal(size=4) + 1j * rng.normal(size=4)
        v /= np.linalg.norm(v)
        ps.append(np.linalg.norm(y.entries @ v) ** 2)
    assert max(ps) - min(ps) < 1e-10 * max(ps)
    assert ps[0] == pytest.approx(abs(sched.prefactor) ** 2, rel=1e-10)


def test_teleport_constructions_agree_and_round_trip():
    space = FockSpace((3, 3, 1))
    exact = teleport_identity(space, 0, 1)
    mirror = teleport_identity(space, 0, 1, "mirror")
    assert np.allclose(exact.entries, mirror.entries, atol=1e-13)
    psi = fock_state(exact.in_space, (2, 1))
    out = exact.entries @ psi.amplitudes
    assert out[exact.out_space.rank((2, 1))] == 1.0
    back = teleport_identity(space, 1, 0) @ exact
    assert np.array_equal(back.entries, np.eye(back.in_space.dim))


def test_teleport_errors():
    with pytest.raises(DomainError):
        teleport_identity(FockSpace((1, 1)), 0, 0)
    with pytest.raises(DimensionError):
        teleport_identity(FockSpace((1, 2)), 0, 1)
    with pytest.raises(DomainError):
        teleport_identity(FockSpace((1, 1)), 0, 1, "other")


def test_permutation_spec():
    with pytest.raises(DomainError):
        PermutationSpec((0, 0))
    with pytest.raises(DomainError):
        PermutationSpec((1, 0), (0.1,))
    assert PermutationSpec((2, 0, 1)).inverse == (1, 2, 0)


@pytest.mark.parametrize("p", list(itertools.permutations(range(3))))
def test_mirror_heisenberg_relation(p):
    space = FockSpace.uniform(3, 2)
    u = n_mode_mirror(space, PermutationSpec(p))
    for j in range(3):
        lhs = u.H @ annihilation(space, j) @ u
        assert np.allclose(lhs.entries, annihilation(space, p[j]).entries, atol=1e-12)
    assert np.allclose((u.H @ u).entries, np.eye(space.dim), atol=1e-12)


def test_mirror_with_phases():
    space = FockSpace.uniform(2, 2)
    u = n_mode_mirror(space, PermutationSpec((1, 0), (0.3, -1.1)))
    for j, ph in enumerate((0.3, -1.1)):
        lhs = u.H @ annihilation(space, j) @ u
        assert np.allclose(lhs.entries, cmath.exp(1j * ph) * annihilation(space, 1 - j).entries, atol=1e-12)
    with pytest.raises(DimensionError):
        n_mode_mirror(space, PermutationSpec((0, 1, 2)))
    with pytest.raises(DimensionError):
        n_mode_mirror(FockSpace((1, 2)), PermutationSpec((1, 0)))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_multiphoton_amplitudes(k, N):
    z = 0.6 + 0.3j
    state, p = prep_multiphoton(z, N, k)
    ref = oracles.multiphoton_amplitudes(z, N)
    got = np.array([state.amplitude([n] * k) for n in range(N + 1)])
    chi = cmath.phase(np.vdot(ref, got))
    assert np.max(np.abs(got - cmath.exp(1j * chi) * ref)) < 1e-12
    assert abs(got[0]) == pytest.approx(multiphoton_norm(z, N), abs=1e-12)
    assert state.norm2 == pytest.approx(1.0)
    target = multiphoton_target(z, N, k)
    assert np.allclose(np.abs(target.amplitudes), np.abs(state.amplitudes), atol=1e-12)
    assert 0 < p <= 1


def test_multiphoton_frozen_values():
    # z = 1, N = 2, k = 2: equal weights 1/sqrt(3); p = 1/9 with balanced couplers
    state, p = prep_multiphoton(1.0, 2, 2)
    assert abs(state.amplitude((2, 2))) == pytest.approx(1 / math.sqrt(3))
    assert p == pytest.approx(1 / 9, rel=1e-12)
    assert multiphoton_norm(1.0, 4) == pytest.approx(1 / math.sqrt(5))


def test_multiphoton_with_other_device():
    dev = JointDevice(0.8, 0.6)
    state, _ = prep_multiphoton(0.5, 2, 2, device=dev)
    ref = oracles.multiphoton_amplitudes(0.5, 2)
    got = np.array([state.amplitude([n, n]) for n in range(3)])
    assert np.allclose(np.abs(got), np.abs(ref), atol=1e-12)
    assert len(multiphoton_schedule(0.5, 2, 2, dev)) == 2
    with pytest.raises(DimensionError):
        prep_multiphoton(0.5, 3, 1, cutoff=2)
    with pytest.raises(DomainError):
        multiphoton_schedule(0.5, 1, 0)
