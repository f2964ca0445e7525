"""End-to-end constructions: cross-Kerr emulation, mode teleportation and
permutation mirrors, and multi-photon entangled states."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, DomainError
from .fock import FockSpace, OperatorMatrix, StateVector, vacuum
from .optics import BALANCED, BeamSplitterParams, Network, compose_params
from .resource import psi1234_state
from .synthesis import (JointDevice, KerrProduct, MonomialSpec, Stage, SynthesisSchedule,
                        compose_schedule, effective_degree, exponential_zn_schedule,
                        interpolation_poly, roots_to_schedule)

DEDUP_TOL = 1e-9


def fidelity(target: OperatorMatrix | np.ndarray, Y: OperatorMatrix | np.ndarray) -> float:
    """``|tr(U^dagger Y)|^2 / (d tr(Y^dagger Y))``; 1 iff ``Y`` is a multiple of unitary ``U``."""
    u = target.entries if isinstance(target, OperatorMatrix) else np.asarray(target)
    y = Y.entries if isinstance(Y, OperatorMatrix) else np.asarray(Y)
    norm = float(np.vdot(y, y).real)
    if norm == 0.0:
        return 0.0
    return abs(np.vdot(u, y)) ** 2 / (u.shape[0] * norm)


# -- cross-Kerr ---------------------------------------------------------------

@dataclass(frozen=True)
class KerrTarget:
    phi: float
    M: int
    k_int: int = 1

    def __post_init__(self):
        if self.phi == 0 or not math.isfinite(self.phi):
            raise DomainError("phi must be finite and nonzero")
        if self.M < 0:
            raise DomainError("M must be non-negative")
        if self.k_int < 1:
            raise DomainError("k_int must be a positive integer")

    @property
    def gamma(self) -> float:
        return 2.0 * math.pi * self.k_int / abs(self.phi)

    def first_coupler(self, phase: float = 0.0) -> BeamSplitterParams:
        """Coupler with ``|T1/R1|^2 = gamma`` and real positive ``R1``."""
        g = self.gamma
        return BeamSplitterParams(math.sqrt(g / (1 + g)) * cmath.exp(1j * phase), math.sqrt(1 / (1 + g)))


def high_transmittance_k(phi: float) -> int:
    """Smallest ``k`` with ``|T1|^2 >= 1/2``, i.e. ``2 pi k / |phi| >= 1``."""
    return max(1, math.ceil(abs(phi) / (2.0 * math.pi) - 1e-12))


def kerr_stage(T1: complex, R1: complex, T2: complex, R2: complex,
               xi: complex) -> tuple[OperatorMatrix, complex, complex, float]:
    """Closed form ``alpha T1**(n0+n1) (A - beta)`` of one two-mode stage on cutoffs (3, 3).

    ``A = (n1 - gamma)(n0 - gamma)``, ``gamma = |T1/R1|^2``.
    """
    T1, R1, T2, R2, xi = (complex(v) for v in (T1, R1, T2, R2, xi))
    BeamSplitterParams(T1, R1)
    BeamSplitterParams(T2, R2)
    alpha, beta, gamma = kerr_stage_coefficients(T1, R1, T2, R2, xi)
    return kerr_stage_closed_form(FockSpace((3, 3)), T1, alpha, beta, gamma), alpha, beta, gamma


def kerr_stage_coefficients(T1, R1, T2, R2, xi) -> tuple[complex, complex, float]:
    if R1 == 0:
        raise DomainError("R1 = 0 makes gamma singular")
    if xi == 0:
        raise DomainError("xi must be nonzero")
    if T1 == 0:
        raise DomainError("T1 must be nonzero")
    gamma = abs(T1 / R1) ** 2
    if R2 == 0:
        raise DomainError("R2 = 0 sends beta to infinity")
    w = (T1 / abs(R1) ** 2) ** 2
    beta = -(1.0 / xi) * w * (T2 / R2) ** 2
    # -T2^2 / (beta sqrt(1+|xi|^2)) rewritten so T2 = 0 stays finite
    alpha = xi * R2 ** 2 / (w * math.sqrt(1.0 + abs(xi) ** 2))
    return complex(alpha), complex(beta), gamma


def kerr_stage_closed_form(space: FockSpace, T1, alpha, beta, gamma, modes=(0, 1)) -> OperatorMatrix:
    occ = space.occupations
    n0, n1 = occ[:, modes[0]], occ[:, modes[1]]
    d = alpha * complex(T1) ** (n0 + n1) * ((n1 - gamma) * (n0 - gamma) - beta)
    return OperatorMatrix.on(space, np.diag(d.astype(complex)))


def kerr_stage_network(T1, R1, T2, R2, xi, cutoff: int = 3) -> OperatorMatrix:
    """Brute-force conditioning of the two-mode stage.

    Couplers ``U15(1)``, ``U35(2)``, ``U04(1)``, ``U24(2)`` act in that order
    on the four-mode ancilla state; detectors on modes 2, 3, 4, 5 see 1, 1, 0, 0.
    """
    b1, b2 = BeamSplitterParams(T1, R1), BeamSplitterParams(T2, R2)
    space = FockSpace((cutoff, cutoff, 2, 2, 2, 2))
    net = Network(space).bs(1, 5, b1).bs(3, 5, b2).bs(0, 4, b1).bs(2, 4, b2)
    return net.conditional({(2, 3, 4, 5): psi1234_state(xi, 2)}, {2: 1, 3: 1, 4: 0, 5: 0})


def kerr_second_coupler(T1, R1, xi, beta: complex) -> BeamSplitterParams:
    """Second coupler giving the requested ``beta`` at fixed first coupler and ``xi``."""
    q2 = -complex(beta) * complex(xi) * (abs(complex(R1)) ** 2 / complex(T1)) ** 2
    q = cmath.sqrt(q2)
    R2 = 1.0 / math.sqrt(1.0 + abs(q) ** 2)
    return BeamSplitterParams(q * R2, R2)


def kerr_nodes(gamma: float, M: int, tol: float = DEDUP_TOL) -> np.ndarray:
    """Distinct values of ``(n1 - gamma)(n0 - gamma)`` over ``0 <= n0, n1 <= M``."""
    raw = sorted((n1 - gamma) * (n0 - gamma) for n0 in range(M + 1) for n1 in range(M + 1))
    nodes: list[float] = []
    for v in raw:
        if not nodes or abs(v - nodes[-1]) > tol * max(1.0, abs(v)):
            nodes.append(v)
    return np.array(nodes)


def synthesize_cross_kerr(target: KerrTarget, xi: complex = 0.5, T1_phase: float = 0.0,
                          compensate: bool = True, high_transmittance: bool = False
                          ) -> tuple[SynthesisSchedule, OperatorMatrix]:
    """Schedule acting as ``exp(i phi n1 n0)`` (times a scalar) on ``n0, n1 <= M``.

    The node polynomial interpolates ``exp(i phi A_l)``; with
    ``gamma phi = 2 pi k`` it agrees with the Kerr phase up to the global
    factor ``exp(i phi gamma^2)``.  With ``compensate`` the leftover
    ``T1**(N (n0 + n1))`` is removed by two photon-number schedules.
    Returns the schedule and its composed operator on cutoffs ``(M, M)``.
    """
    if high_transmittance:
        target = KerrTarget(target.phi, target.M, high_transmittance_k(target.phi))
    sgn = 1 if target.phi > 0 else -1
    b1 = target.first_coupler(T1_phase)
    gamma = target.gamma
    nodes = kerr_nodes(gamma, target.M)
    values = np.exp(1j * target.phi * nodes)
    coeffs = interpolation_poly(nodes, values)
    deg = effective_degree(coeffs)
    algebra = KerrProduct((0, 1), gamma)
    base = roots_to_schedule(coeffs[: deg + 1], algebra, b1.T)
    stages = []
    for st in base.stages:
        beta_dev = -st.beta
        b2 = kerr_second_coupler(b1.T, b1.R, xi, beta_dev)
        alpha, beta_chk, _ = kerr_stage_coefficients(b1.T, b1.R, b2.T, b2.R, complex(xi))
        dev = {"T1": b1.T, "R1": b1.R, "T2": b2.T, "R2": b2.R, "xi": complex(xi)}
        stages.append(Stage(algebra, -beta_chk, alpha, 1.0, b1.T, (0, 1), dev))
    N = len(stages)
    alpha_prod = complex(np.prod([s.alpha for s in stages])) if stages else 1.0
    prefactor = alpha_prod / base.leading
    meta = {"nodes": tuple(float(v) for v in nodes), "N": N, "gamma": gamma,
            "k_int": target.k_int, "sign": sgn, "global_phase": float(target.phi * gamma ** 2)}
    if compensate and N > 0 and target.M > 0 and b1.T != 1:
        zc = b1.T ** (-N)
        for mode in (0, 1):
            comp = exponential_zn_schedule(zc, target.M, b1.T, b1.R, mode)
            stages.extend(comp.stages)
            prefactor *= comp.prefactor
    sched = SynthesisSchedule(tuple(stages), base.leading, complex(prefactor), meta)
    space = FockSpace((target.M, target.M))
    return sched, compose_schedule(space, sched)


def kerr_target_operator(phi: float, M: int) -> OperatorMatrix:
    space = FockSpace((M, M))
    occ = space.occupations
    return OperatorMatrix.on(space, np.diag(np.exp(1j * phi * occ[:, 0] * occ[:, 1])))


# -- teleportation and mirrors --------------------------------------------------

MIRROR = compose_params(BALANCED, BALANCED)


def teleport_identity(space: FockSpace, j: int, k: int, construction: str = "exact") -> OperatorMatrix:
    """``sum_n |n>_k <n|_j``: moves mode ``j`` into mode ``k``.

    Maps ``space`` without mode ``k`` (prepared in vacuum) to ``space``
    without mode ``j`` (projected on vacuum).  ``"mirror"`` builds it from two
    balanced couplers composing to a full mirror followed by a pi phase on
    mode ``k``; ``"exact"`` writes down the permutation directly.
    """
    j, k = space.check_mode(j), space.check_mode(k)
    if j == k:
        raise DomainError("teleportation needs two distinct modes")
    if space.cutoffs[j] != space.cutoffs[k]:
        raise DimensionError("teleported modes must share a cutoff")
    if construction == "mirror":
        net = Network(space).bs(j, k, BALANCED).bs(j, k, BALANCED).phase(k, math.pi)
        return net.conditional({k: 0}, {j: 0})
    if construction != "exact":
        raise DomainError(f"unknown construction {construction!r}")
    in_space = space.without([k])
    out_space = space.without([j])
    in_modes = [m for m in range(space.num_modes) if m != k]
    out_modes = [m for m in range(space.num_modes) if m != j]
    mat = np.zeros((out_space.dim, in_space.dim), dtype=complex)
    for col, occ in enumerate(in_space.basis()):
        full = dict(zip(in_modes, occ))
        full[k] = full.pop(j)
        mat[out_space.rank([full[m] for m in out_modes]), col] = 1.0
    return OperatorMatrix(in_space, out_space, mat)


@dataclass(frozen=True)
class PermutationSpec:
    """``p[j]`` is the image of mode ``j``; optional phases ``phi_j`` dress the result."""

    p: tuple[int, ...]
    phases: tuple[float, ...] | None = None

    def __post_init__(self):
        p = tuple(int(v) for v in self.p)
        if sorted(p) != list(range(len(p))):
            raise DomainError(f"{p} is not a permutation of 0..{len(p) - 1}")
        object.__setattr__(self, "p", p)
        if self.phases is not None:
            ph = tuple(float(v) for v in self.phases)
            if len(ph) != len(p):
                raise DomainError("one phase per mode required")
            object.__setattr__(self, "phases", ph)

    @property
    def inverse(self) -> tuple[int, ...]:
        inv = [0] * len(self.p)
        for j, pj in enumerate(self.p):
            inv[pj] = j
        return tuple(inv)


def n_mode_mirror(space: FockSpace, spec: PermutationSpec) -> OperatorMatrix:
    """Unitary ``U`` with ``U^dagger a_j U = a_{p(j)}`` built from teleportations.

    Every mode is first teleported to its own auxiliary mode, then each
    auxiliary mode is teleported onward; auxiliary modes start and end in
    vacuum.  The routing uses ``p^{-1}`` so that the content of mode ``p(j)``
    lands in mode ``j``.
    """
    n = len(spec.p)
    if space.num_modes != n:
        raise DimensionError(f"permutation of {n} modes on a {space.num_modes}-mode space")
    route = spec.inverse
    for j in range(n):
        if space.cutoffs[j] != space.cutoffs[route[j]]:
            raise DimensionError("permuted modes must share a cutoff")
    big = FockSpace(space.cutoffs + space.cutoffs)
    net = Network(big)
    for j in range(n):
        net = net.bs(j, n + j, BALANCED).bs(j, n + j, BALANCED).phase(n + j, math.pi)
    for j in range(n):
        dest = route[j]
        net = net.bs(n + j, dest, BALANCED).bs(n + j, dest, BALANCED).phase(dest, math.pi)
    if spec.phases is not None:
        for j, ph in enumerate(spec.phases):
            net = net.phase(j, ph)
    aux = {n + j: 0 for j in range(n)}
    return net.conditional(aux, aux)


# -- multi-photon states --------------------------------------------------------

def multiphoton_target(z: complex, N: int, k: int, cutoff: int | None = None) -> StateVector:
    """Normalised ``sum_{n<=N} z**n |n, ..., n>`` on ``k`` modes."""
    cutoff = N if cutoff is None else cutoff
    space = FockSpace.uniform(k, cutoff)
    amps = np.zeros(space.dim, dtype=complex)
    for n in range(N + 1):
        amps[space.rank([n] * k)] = complex(z) ** n if n else 1.0
    return StateVector(space, amps / math.sqrt(float(np.vdot(amps, amps).real)))


def multiphoton_norm(z: complex, N: int) -> float:
    """``sqrt((1 - |z|^2) / (1 - |z|^(2(N+1))))``; ``1/sqrt(N+1)`` at ``|z| = 1``."""
    a = abs(complex(z)) ** 2
    if abs(a - 1.0) < 1e-14:
        return 1.0 / math.sqrt(N + 1)
    return math.sqrt((1.0 - a) / (1.0 - a ** (N + 1)))


def multiphoton_schedule(z: complex, N: int, k: int,
                         device: JointDevice | None = None) -> SynthesisSchedule:
    """Schedule for ``sum_n n!^(-k/2) (z A)^n`` with ``A = a_k^dag ... a_1^dag``.

    Coefficients are pre-scaled by ``T1**(-N k n)`` so the accumulated
    attenuation cancels on the vacuum input.
    """
    if N < 0 or k < 1:
        raise DomainError("need N >= 0 and k >= 1")
    if device is None:
        device = JointDevice(1 / math.sqrt(2), 1 / math.sqrt(2))
    T1 = device.T1
    algebra = MonomialSpec(tuple((m, 1) for m in range(k)))
    coeffs = np.array([complex(z) ** n / math.factorial(n) ** (k / 2) * T1 ** (-N * k * n)
                       if n else 1.0 for n in range(N + 1)], dtype=complex)
    deg = effective_degree(coeffs)
    return roots_to_schedule(coeffs[: deg + 1], algebra, T1, device)


def prep_multiphoton(z: complex, N: int, k: int, cutoff: int | None = None,
                     device: JointDevice | None = None) -> tuple[StateVector, float]:
    """Apply the multiphoton schedule to vacuum; returns the normalised state and ``p``.

    ``p`` is the squared norm of the conditioned output, i.e. the product of
    the stage heralding probabilities.
    """
    cutoff = N if cutoff is None else cutoff
    if cutoff < N:
        raise DimensionError("cutoff must be at least N in every mode")
    space = FockSpace.uniform(k, cutoff)
    sched = multiphoton_schedule(z, N, k, device)
    if not sched.stages:
        return vacuum(space), 1.0
    y = compose_schedule(space, sched)
    out = StateVector(space, y.entries @ vacuum(space).amplitudes)
    p = out.norm2
    return out.normalized(), p
