"""Single-photon cloners and preparation of the shared entangled resource.

The resource on modes 1..k is::

    (|s_1 ... s_k> + z |1-s_1 ... 1-s_k>) / sqrt(1 + |z|^2)

It is grown from one photon split on a balanced coupler, copied onto more
modes by cloners, and steered to the requested ``z`` by mixing with a
coherent state and post-selecting.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasibleError
from .fock import (FockSpace, OperatorMatrix, StateVector, annihilation, apply_local,
                   coherent_cutoff, coherent_state, fock_state, product_state,
                   relabel_operator)
from .optics import BALANCED, BALANCED_MINUS, BeamSplitterParams, Network, exact_block

CLONERS = ("ideal", "kerr", "three_wave", "linear")
GOLDEN_XI2 = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ResourceSpec:
    bits: tuple[int, ...]
    z: complex

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) < 1:
            raise DomainError("a resource needs at least one mode")
        if any(b not in (0, 1) for b in bits):
            raise DomainError(f"bits must be 0 or 1, got {bits}")
        z = complex(self.z)
        if not cmath.isfinite(z):
            raise DomainError("z must be finite")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "z", z)

    @property
    def k(self) -> int:
        return len(self.bits)


def resource_state(spec: ResourceSpec, cutoff: int = 1) -> StateVector:
    """The target state itself, written down directly."""
    space = FockSpace.uniform(spec.k, cutoff)
    a = fock_state(space, spec.bits)
    b = fock_state(space, tuple(1 - s for s in spec.bits))
    return (a + b * spec.z) * (1.0 / math.sqrt(1.0 + abs(spec.z) ** 2))


# -- cloners ------------------------------------------------------------------

def cloner_ideal(space: FockSpace, k_mode: int, j_mode: int) -> OperatorMatrix:
    """``sum_{s=0,1} |s>_k |s>_j <s|_j`` from ``space`` without mode k into ``space``."""
    k_mode, j_mode = space.check_mode(k_mode), space.check_mode(j_mode)
    if k_mode == j_mode:
        raise DomainError("cloner needs two distinct modes")
    if space.cutoffs[k_mode] < 1:
        raise DomainError("clone mode needs cutoff >= 1")
    in_space = space.without([k_mode])
    in_modes = [m for m in range(space.num_modes) if m != k_mode]
    j_pos = in_modes.index(j_mode)
    q = np.zeros((space.dim, in_space.dim), dtype=complex)
    for col, occ in enumerate(in_space.basis()):
        s = occ[j_pos]
        if s > 1:
            continue
        full = [0] * space.num_modes
        for m, n in zip(in_modes, occ):
            full[m] = n
        full[k_mode] = s
        q[space.rank(full), col] = 1.0
    return OperatorMatrix(in_space, space, q)


def kerr_cloner_probability(xi: complex) -> float:
    x2 = abs(xi) ** 2
    return 1.0 / ((1.0 + 1.0 / x2) * math.exp(x2))


def linear_cloner_probability(xi: complex) -> float:
    return kerr_cloner_probability(xi) / 4.0


def psi1234_probability(xi: complex) -> float:
    return ((1.0 - abs(xi)) / 2.0) ** 2 * (1.0 + abs(xi) ** 2)


def cloner_kerr_mzi(xi: complex, cutoff: int = 1) -> tuple[OperatorMatrix, float]:
    """Mach-Zehnder cloner with a cross-Kerr phase of pi on one arm.

    Returns the conditional operator from mode 0 to modes (0, 1) and the
    simulated success probability for a single-photon input.
    """
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xi = 0 never produces the heralding photon")
    space = FockSpace((cutoff, max(cutoff, 1), 2, 2))
    net = (Network(space)
           .bs(2, 1, BALANCED_MINUS)
           .kerr(0, 2, math.pi)
           .bs(2, 1, BALANCED_MINUS.inverse())
           .bs(3, 2, BeamSplitterParams.from_reflectance_ratio(xi)))
    coh = coherent_state(FockSpace((2,)), 0, xi)
    y = net.conditional({1: 0, 2: 1, 3: coh}, {2: 0, 3: 1})
    return y, _p_single_photon(y)


def three_wave_local(cutoffs: Sequence[int], phi: float) -> np.ndarray:
    """``exp(i phi (a0 a1^dag a2^dag + h.c.))`` with exact matrix elements."""
    top = sum(cutoffs)

    def gen(big: FockSpace) -> np.ndarray:
        a0, a1, a2 = (annihilation(big, m).entries for m in range(3))
        h = a0 @ a1.conj().T @ a2.conj().T
        return 1j * phi * (h + h.conj().T)

    return exact_block(gen, cutoffs, (top, top, top))


def cloner_three_wave(phi: float = math.pi / 2, cutoff: int = 1) -> OperatorMatrix:
    """Three-wave-mixer cloner preceded by ``exp(-i pi n0 / 2)``.

    The result maps mode 0 to modes (0, 1) after relabelling the mixer's
    output mode 2 as mode 0.
    """
    space = FockSpace((cutoff, cutoff, cutoff))
    net = (Network(space)
           .phase(0, -math.pi / 2)
           .local(three_wave_local(space.cutoffs, phi), [0, 1, 2], kind="three_wave"))
    y = net.conditional({1: 0, 2: 0}, {0: 0})
    return relabel_operator(y, [1, 0], [0])


def psi1234_state(xi: complex, cutoff: int = 1) -> StateVector:
    """``(|1,1,0,0> + xi |0,0,1,1>) / sqrt(1 + |xi|^2)`` on four modes."""
    space = FockSpace.uniform(4, cutoff)
    s = fock_state(space, (1, 1, 0, 0)) + fock_state(space, (0, 0, 1, 1)) * complex(xi)
    return s * (1.0 / math.sqrt(1.0 + abs(xi) ** 2))


def cloner_linear(xi: complex, cutoff: int = 1, psi: StateVector | None = None) -> tuple[OperatorMatrix, float]:
    """Beam-splitter-only cloner fed by the four-mode state ``psi``.

    ``psi`` defaults to the ideal four-mode state for ``xi``; the output mode
    2 is relabelled as mode 0.
    """
    xi = complex(xi)
    if xi == 0:
        raise DomainError("xi = 0 never produces the heralding photon")
    c = max(cutoff, 1)
    space = FockSpace((cutoff, c, c, c, c, c))
    if psi is None:
        psi = psi1234_state(xi, c)
    net = Network(space).bs(5, 3, BALANCED).bs(0, 4, BALANCED)
    coh = coherent_state(FockSpace((c,)), 0, xi)
    y = net.conditional({(1, 2, 3, 4): psi, 5: coh}, {3: 0, 4: 0, 0: 1, 5: 1})
    return relabel_operator(y, [1, 0], [0]), _p_single_photon(y)


def prep_psi1234(T: complex, R: complex, cutoff: int = 4) -> tuple[StateVector, float]:
    """Herald the four-mode state from four single photons.

    Returns the output on modes 1..4 with the phase ``pi - 2 arg T`` removed,
    which equals :func:`psi1234_state` for ``xi = -conj(R)^2``, and the
    simulated heralding probability.
    """
    bs = BeamSplitterParams(T, R)
    space = FockSpace.uniform(6, cutoff)
    net = (Network(space)
           .bs(1, 5, BALANCED).bs(0, 2, BALANCED).bs(1, 2, BALANCED)
           .bs(3, 5, bs.conj()).bs(0, 4, bs)
           .bs(3, 4, BALANCED).bs(5, 0, BALANCED))
    out = net.apply(product_state(space, {0: 1, 1: 1, 2: 1, 5: 1}))
    t = out.tensor()[1, :, :, :, :, 1]
    p = float(np.sum(np.abs(t) ** 2))
    # the exact zero at |xi| = 1 survives only as rounding noise
    if p < 1e-20:
        raise InfeasibleError("heralding probability vanishes (|xi| = 1)")
    phase = cmath.exp(1j * (math.pi - 2.0 * cmath.phase(bs.T)))
    amps = np.reshape(t, -1, order="F") * phase / math.sqrt(p)
    return StateVector(FockSpace.uniform(4, cutoff), amps), p


def _p_single_photon(y: OperatorMatrix) -> float:
    col = y.entries[:, 1] if y.in_space.dim > 1 else y.entries[:, 0]
    return float(np.vdot(col, col).real)


def cloner_local(kind: str, cutoff: int = 1, xi: complex | None = None) -> tuple[np.ndarray, float]:
    """Two-mode matrix on (source j, clone k) applying a cloner to ``|s>_j|0>_k``.

    Inputs with the clone mode occupied are mapped to zero.  Also returns the
    per-use success probability.
    """
    if kind not in CLONERS:
        raise DomainError(f"unknown cloner {kind!r}; choose from {CLONERS}")
    xi = complex(xi) if xi is not None else math.sqrt(GOLDEN_XI2)
    if kind == "ideal":
        y = cloner_ideal(FockSpace((cutoff, cutoff)), 1, 0)
        p = 1.0
    elif kind == "kerr":
        y, p = cloner_kerr_mzi(xi, cutoff)
    elif kind == "three_wave":
        y = cloner_three_wave(math.pi / 2, cutoff)
        p = 1.0
    else:
        y, p = cloner_linear(xi, cutoff)
    local_space = FockSpace((cutoff, cutoff))
    mat = np.zeros((local_space.dim, local_space.dim), dtype=complex)
    # y maps mode j to modes (j, k); fill only columns with k empty
    mat[:, : cutoff + 1] = _pad_rows(y, local_space)
    return mat, p


def _pad_rows(y: OperatorMatrix, target: FockSpace) -> np.ndarray:
    out = np.zeros((target.dim, y.in_space.dim), dtype=complex)
    for row, occ in enumerate(y.out_space.basis()):
        if all(n <= d for n, d in zip(occ, target.cutoffs)):
            out[target.rank(occ)] = y.entries[row]
    return out


# -- resource preparation -------------------------------------------------------

def resource_probability(z: complex, alpha2: float) -> float:
    """Heralding probability of the coherent conditioning step."""
    z2 = abs(z) ** 2
    if alpha2 == 0.0 and z2 == 0.0:
        return 0.5
    return (1.0 + z2) * alpha2 * math.exp(-alpha2) / (2.0 * (alpha2 + z2))


def optimal_alpha(z: complex) -> tuple[float, float]:
    """``(|alpha|^2, p)`` maximising the heralding probability at fixed ``z``."""
    z2 = abs(z) ** 2
    alpha2 = math.sqrt(z2 * z2 / 4.0 + z2) - z2 / 2.0
    return alpha2, resource_probability(z, alpha2)


@dataclass(frozen=True)
class PreparedResource:
    state: StateVector
    p: float
    global_phase: float
    T: complex
    R: complex
    alpha: complex
    p_condition: float
    p_cloners: float

    def __iter__(self):
        return iter((self.state, self.p, self.global_phase))


def _coupler_for(z: complex, T, R, alpha) -> tuple[complex, complex, complex]:
    if T is not None and R is not None:
        bs = BeamSplitterParams(T, R)
        if alpha is None:
            if bs.R == 0:
                if z != 0:
                    raise InfeasibleError("R = 0 cannot reach z != 0")
                return bs.T, bs.R, 0.0
            alpha = z * bs.T / bs.R
        alpha = complex(alpha)
        if abs(bs.R * alpha / bs.T - z) > 1e-12 * max(1.0, abs(z)):
            raise DomainError("T, R and alpha are inconsistent with z = R alpha / T")
        return bs.T, bs.R, alpha
    if alpha is None:
        alpha = math.sqrt(optimal_alpha(z)[0])
    alpha = complex(alpha)
    if alpha == 0:
        if z != 0:
            raise InfeasibleError("alpha = 0 cannot reach z != 0")
        return 1.0, 0.0, 0.0
    bs = BeamSplitterParams.from_reflectance_ratio(z / alpha)
    return bs.T, bs.R, alpha


def build_resource(spec: ResourceSpec, cloner: str = "ideal", T=None, R=None, alpha=None,
                   zero_position: int | None = None, xi: complex | None = None,
                   resource_cutoff: int = 1) -> PreparedResource:
    """Simulate the preparation pipeline for ``spec``.

    ``zero_position`` names the requested mode that plays the role of the
    photon's second arm (its bit must be 0 in the construction).  If its
    requested bit is 1 the pipeline prepares the mirrored state with
    ``1 - bits`` and ``1/z``, which differs only by the phase ``arg z``.
    ``T``, ``R`` and ``alpha`` are optional; missing ones are solved from
    ``z = R alpha / T`` with the probability-optimal ``|alpha|``.
    """
    bits, z = list(spec.bits), spec.z
    k = spec.k
    if zero_position is None:
        zero_position = bits.index(0) if 0 in bits else 0
    if not 0 <= zero_position < k:
        raise DomainError(f"zero_position {zero_position} outside 0..{k - 1}")
    flip = bits[zero_position] == 1
    if flip:
        if z == 0:
            raise InfeasibleError("cannot mirror a z = 0 resource whose designated zero bit is 1")
        bits = [1 - b for b in bits]
        z = 1.0 / z
    T, R, alpha = _coupler_for(z, T, R, alpha)

    ones = [l for l in range(k) if bits[l] == 1]
    zeros = [l for l in range(k) if bits[l] == 0 and l != zero_position]
    # construction mode c (1..k) -> requested position
    target = ones + [zero_position] + zeros
    j = len(ones) + 1

    dc = coherent_cutoff(alpha) if alpha != 0 else 1
    rc = resource_cutoff
    space = FockSpace((1,) + (rc,) * k + (dc,))
    state = product_state(space, {0: 1, k + 1: coherent_state(FockSpace((dc,)), 0, alpha)})
    state = Network(space).bs(0, j, BALANCED_MINUS).apply(state)

    local, p_one = cloner_local(cloner, rc, xi)
    p_cloners = 1.0
    sources = [(c, 0) for c in range(1, j)] + [(c, j) for c in range(j + 1, k + 1)]
    amps = state.amplitudes
    for clone, source in sources:
        mat = local
        if source == 0:
            # mode 0 has cutoff 1; restrict the local matrix to that block
            mat = _restrict_source(local, rc, 1)
        amps = apply_local(space, amps, mat, [source, clone])
        p_cloners *= p_one
    state = StateVector(space, amps, state.tail_weight)
    state = Network(space).bs(0, k + 1, BeamSplitterParams(T, R)).apply(state)
    t = state.tensor()[(1,) + (slice(None),) * k + (0,)]
    out_space = FockSpace((rc,) * k)
    amps = np.reshape(t, -1, order="F")
    # construction order -> requested order
    inv = np.argsort(target)
    amps = np.reshape(np.transpose(np.reshape(amps, out_space.dims, order="F"), inv), -1, order="F")
    conditioned = StateVector(out_space, amps, state.tail_weight)
    p = conditioned.norm2
    if p == 0.0:
        raise InfeasibleError("heralding probability vanishes")
    normed = conditioned.normalized()
    ideal = resource_state(spec, rc)
    phase = cmath.phase(np.vdot(ideal.amplitudes, normed.amplitudes))
    return PreparedResource(normed, p, phase, complex(T), complex(R), complex(alpha),
                            resource_probability(z, abs(alpha) ** 2), p_cloners)


def _restrict_source(local: np.ndarray, cutoff: int, source_cutoff: int) -> np.ndarray:
    """Slice a (source, clone) matrix built for ``cutoff`` down to a smaller source cutoff."""
    big = FockSpace((cutoff, cutoff))
    keep = big.occupations[:, 0] <= source_cutoff
    return local[np.ix_(keep, keep)]
