import cmath
import math

import numpy as np
import pytest

from linsub.errors import DomainError, SingularParameterError
from linsub.fock import FockSpace, annihilation, fock_state, total_mask
from linsub.optics import (BALANCED, IDENTITY_PARAMS, BeamSplitterParams, Network, bs_factorized,
                           bs_local, bs_unitary, compose_params, cross_kerr_local, exp_series,
                           heisenberg_residual, phase_shifter)

import oracles


def random_params(rng):
    theta = rng.uniform(0, math.pi / 2)
    a, b, c = rng.uniform(-math.pi, math.pi, 3)
    return BeamSplitterParams(math.cos(theta) * cmath.exp(1j * a), math.sin(theta) * cmath.exp(1j * b),
                              cmath.exp(1j * c))


def test_parameter_validation():
    with pytest.raises(DomainError):
        BeamSplitterParams(1.0, 0.5)
    with pytest.raises(DomainError):
        BeamSplitterParams(1.0, 0.0, 2.0)
    p = BeamSplitterParams.from_ratio(2j)
    assert p.T / p.R == pytest.approx(2j)
    q = BeamSplitterParams.from_reflectance_ratio(-0.5)
    assert q.R / q.T == pytest.approx(-0.5)


@pytest.mark.parametrize("seed", range(5))
def test_coupler_elements_match_binomial_expansion(seed):
    rng = np.random.default_rng(seed)
    params = random_params(rng)
    D = 4
    u = bs_local(D, D, params)
    M = params.mode_matrix()
    for nj in range(D + 1):
        for nk in range(D + 1 - nj):
            col = u[:, oracles.rank((nj, nk), (D, D))]
            ref = np.zeros_like(col)
            for (a, b), amp in oracles.coupler_amplitudes(M, nj, nk).items():
                ref[oracles.rank((a, b), (D, D))] = amp
            assert np.allclose(col, ref, atol=1e-12)


def test_heisenberg_relation_and_unitarity_on_safe_block():
    rng = np.random.default_rng(7)
    space = FockSpace((3, 2, 3))
    for _ in range(5):
        p = random_params(rng)
        U = bs_unitary(space, 2, 0, p)
        assert heisenberg_residual(U, p, 2, 0) < 1e-12
        mask = total_mask(space, [0, 2], 3)
        cols = U.entries[:, mask]
        assert np.allclose(cols.conj().T @ cols, np.eye(mask.sum()), atol=1e-12)


def test_balanced_coupler_hong_ou_mandel():
    u = bs_local(2, 2, BALANCED)
    out = u[:, oracles.rank((1, 1), (2, 2))]
    assert abs(out[oracles.rank((1, 1), (2, 2))]) < 1e-15
    assert abs(out[oracles.rank((2, 0), (2, 2))]) ** 2 == pytest.approx(0.5)


def test_identity_params_and_inverse():
    space = FockSpace((2, 2))
    assert np.allclose(bs_unitary(space, 0, 1, IDENTITY_PARAMS).entries, np.eye(space.dim))
    p = random_params(np.random.default_rng(3))
    U = bs_unitary(space, 0, 1, p)
    V = bs_unitary(space, 0, 1, p.inverse())
    assert np.allclose(V.entries, U.entries.conj().T, atol=1e-12)


def test_compose_params_matches_product():
    rng = np.random.default_rng(11)
    p1, p2 = random_params(rng), random_params(rng)
    space = FockSpace((3, 3))
    lhs = bs_unitary(space, 0, 1, p2) @ bs_unitary(space, 0, 1, p1)
    rhs = bs_unitary(space, 0, 1, compose_params(p2, p1))
    mask = total_mask(space, [0, 1], 3)
    assert np.allclose(lhs.entries[:, mask], rhs.entries[:, mask], atol=1e-12)
    assert np.allclose(compose_params(p2, p1).mode_matrix(), p2.mode_matrix() @ p1.mode_matrix())


def test_factorized_form_matches_on_safe_block():
    rng = np.random.default_rng(5)
    space = FockSpace((4, 4))
    mask = total_mask(space, [0, 1], 4)
    for _ in range(3):
        p = random_params(rng)
        f = bs_factorized(space, 0, 1, p.T, p.R, p.P)
        u = bs_unitary(space, 0, 1, p)
        # exact on inputs whose photons cannot reach the truncation edge
        assert np.allclose(f.entries[:, mask], u.entries[:, mask], atol=1e-12)
    with pytest.raises(SingularParameterError):
        bs_factorized(space, 0, 1, 0.0, 1.0)


def test_exp_series_matches_scipy():
    import scipy.linalg
    x = np.random.default_rng(2).normal(size=(4, 4)) * 0.5
    assert np.allclose(exp_series(x), scipy.linalg.expm(x), atol=1e-13)


def test_phase_shifter_and_kerr():
    space = FockSpace((3,))
    ph = phase_shifter(space, 0, 0.4)
    assert np.allclose(ph.diagonal(), np.exp(0.4j * np.arange(4)))
    k = cross_kerr_local(1, 1, math.pi)
    assert np.allclose(np.diag(k), [1, 1, 1, -1])


def test_network_apply_matrix_agree():
    space = FockSpace((2, 2, 1))
    net = Network(space).bs(0, 1, BALANCED).phase(1, 0.2).kerr(1, 2, 0.7).bs(2, 0, BALANCED)
    psi = fock_state(space, (1, 1, 0))
    assert np.allclose(net.apply(psi).amplitudes, net.matrix().entries @ psi.amplitudes)
    with pytest.raises(DomainError):
        Network(space).bs(1, 1, BALANCED)
    with pytest.raises(DomainError):
        net.then(Network(FockSpace((1,))))


def test_mode_order_convention():
    space = FockSpace((1, 1))
    U = bs_unitary(space, 0, 1, BALANCED)
    lhs = U.H @ annihilation(space, 0) @ U
    rhs = (annihilation(space, 0) + annihilation(space, 1)) * (1 / math.sqrt(2))
    mask = total_mask(space, [0, 1], 1)
    assert np.allclose(lhs.entries[:, mask], rhs.entries[:, mask])
