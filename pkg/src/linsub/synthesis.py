"""Compile target operator functions into schedules of conditional stages.

A stage acts as ``alpha * T * (A + beta)`` where ``A`` is a fixed operator
(usually a monomial in ladder operators) and ``T = T1 ** (sum of n_j)`` is
the attenuation picked up while the signal passes the first couplers.
Repeating stages with different ``beta`` multiplies their binomials, so any
polynomial in ``A`` can be built from its roots.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import (DegreeError, DomainError, InfeasibleError, NodeCollisionError,
                     SingularParameterError)
from .fock import (FockSpace, OperatorMatrix, annihilation, creation, function_of_number,
                   identity, number, power_of_number)
from .optics import BeamSplitterParams, Network

COEFF_TOL = 1e-10
NODE_TOL = 1e-12


# -- operator algebra -----------------------------------------------------------

@dataclass(frozen=True)
class MonomialSpec:
    """Product of ladder operators; factor ``(j, 0)`` is ``a_j``, ``(j, 1)`` is ``a_j^dagger``.

    ``factors[0]`` acts first (it is the rightmost operator of the product).
    """

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        clean = tuple((int(j), int(s)) for j, s in self.factors)
        if any(s not in (0, 1) for _, s in clean):
            raise DomainError(f"factor bits must be 0 or 1, got {clean}")
        if any(j < 0 for j, _ in clean):
            raise DomainError("mode indices must be non-negative")
        object.__setattr__(self, "factors", clean)

    @classmethod
    def number(cls, mode: int) -> "MonomialSpec":
        return cls(((mode, 0), (mode, 1)))

    @property
    def k(self) -> int:
        return len(self.factors)

    @property
    def modes(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.factors)

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(s for _, s in self.factors)

    @property
    def t_modes(self) -> tuple[int, ...]:
        # the attenuation counts each factor's mode, repeats included
        return self.modes

    def check(self, space: FockSpace) -> None:
        for j in self.modes:
            space.check_mode(j)

    def operator(self, space: FockSpace) -> OperatorMatrix:
        return monomial_operator(space, self)

    def gamma(self, T1: complex) -> complex:
        return gamma_factor(self, T1)

    def to_json(self):
        return [[j, s] for j, s in self.factors]


@dataclass(frozen=True)
class KerrProduct:
    """``(n_b - shift)(n_a - shift)`` on two modes; commutes with any number-diagonal ``T``."""

    modes: tuple[int, int] = (0, 1)
    shift: float = 0.0

    @property
    def t_modes(self) -> tuple[int, ...]:
        return tuple(self.modes)

    def check(self, space: FockSpace) -> None:
        for j in self.modes:
            space.check_mode(j)

    def operator(self, space: FockSpace) -> OperatorMatrix:
        a, b = self.modes
        occ = space.occupations
        return OperatorMatrix.on(space, np.diag((occ[:, b] - self.shift) * (occ[:, a] - self.shift)).astype(complex))

    def gamma(self, T1: complex) -> complex:
        return 1.0

    def to_json(self):
        return {"kerr_product": list(self.modes), "shift": self.shift}


def ladder(space: FockSpace, mode: int, s: int) -> OperatorMatrix:
    return creation(space, mode) if s else annihilation(space, mode)


def monomial_operator(space: FockSpace, spec: MonomialSpec) -> OperatorMatrix:
    spec.check(space)
    op = identity(space)
    for j, s in spec.factors:
        op = ladder(space, j, s) @ op
    return op


def gamma_exponent(spec: MonomialSpec, reading: str = "literal") -> int:
    """Exponent of ``T1`` in the commutation factor of ``A`` past ``T``.

    ``"literal"`` counts a mode once per factor in ``T`` (repeats included);
    ``"distinct"`` counts each mode once.
    """
    net = {}
    for j, s in spec.factors:
        net[j] = net.get(j, 0) + (1 - 2 * s)
    if reading == "literal":
        return sum(net[j] for j in spec.modes)
    if reading == "distinct":
        return sum(net.values())
    raise DomainError(f"unknown reading {reading!r}")


def gamma_factor(spec: MonomialSpec, T1: complex, reading: str = "literal") -> complex:
    e = gamma_exponent(spec, reading)
    T1 = complex(T1)
    if T1 == 0 and e < 0:
        raise SingularParameterError("gamma needs T1 != 0 for this monomial")
    return 1.0 if e == 0 else T1 ** e


def t_operator(space: FockSpace, t_modes: Sequence[int], T1: complex) -> OperatorMatrix:
    return power_of_number(space, complex(T1), list(t_modes))


# -- single stage ---------------------------------------------------------------

@dataclass(frozen=True)
class JointDevice:
    """Beam-splitter settings shared by the ``k`` local devices of one stage."""

    T1: complex
    R1: complex
    T2: complex = 1.0
    R2: complex = 0.0

    def __post_init__(self):
        BeamSplitterParams(self.T1, self.R1)
        BeamSplitterParams(self.T2, self.R2)
        for name in ("T1", "R1", "T2", "R2"):
            object.__setattr__(self, name, complex(getattr(self, name)))


def _device_constants(spec: MonomialSpec, dev: JointDevice) -> tuple[complex, complex]:
    """``(c, t2)`` with ``alpha = c / sqrt(1+|z|^2)`` and ``beta = z * t2 / c``."""
    k, S = spec.k, sum(spec.bits)
    E = 0
    for r in range(k):
        for l in range(r + 1, k):
            if spec.modes[r] == spec.modes[l]:
                E += 1 - 2 * spec.bits[l]
    if S and dev.T1 == 0:
        raise SingularParameterError("creation factors need T1 != 0")
    if E < 0 and dev.T1 == 0:
        raise SingularParameterError("T1 = 0 with a negative attenuation exponent")
    c = (-dev.R2 * dev.R1.conjugate()) ** (k - S) * (dev.R1 / dev.T1 if S else 1.0) ** S
    c *= dev.T1 ** E if E else 1.0
    return c, dev.T2 ** (k - S)


def stage_coefficients(spec: MonomialSpec, dev: JointDevice, z: complex) -> tuple[complex, complex]:
    """``(alpha, beta)`` of the joint device for resource weight ``z``."""
    c, t2 = _device_constants(spec, dev)
    if c == 0:
        raise SingularParameterError("the monomial branch vanishes for these couplers")
    z = complex(z)
    return c / math.sqrt(1.0 + abs(z) ** 2), z * t2 / c


def solve_resource_weight(spec: MonomialSpec, dev: JointDevice, beta: complex) -> complex:
    """Resource weight ``z`` that makes the joint device realise ``beta``."""
    c, t2 = _device_constants(spec, dev)
    if c == 0:
        raise InfeasibleError("the monomial branch vanishes for these couplers")
    if t2 == 0:
        if beta == 0:
            return 0j
        raise InfeasibleError("T2 = 0 blocks the scalar branch")
    return complex(beta) * c / t2


def stage_operator(space: FockSpace, spec: MonomialSpec, dev: JointDevice,
                   z: complex) -> tuple[OperatorMatrix, complex, complex]:
    """Closed form ``alpha * T * (A + beta)`` of one joint-device pass."""
    alpha, beta = stage_coefficients(spec, dev, z)
    op = alpha * (t_operator(space, spec.t_modes, dev.T1) @ (monomial_operator(space, spec) + beta))
    return op, alpha, beta


def joint_device_operator(spec: MonomialSpec, dev: JointDevice, z: complex,
                          cutoff: int, ancilla_cutoff: int = 2) -> OperatorMatrix:
    """Simulate ``k`` local devices sharing one resource state.

    Device ``l`` acts on signal mode ``j_l`` with its own ancilla pair.  In
    case 0 the control port is the second ancilla and the detectors see
    (0, 1); in case 1 it is the first ancilla and both see vacuum.
    """
    from .resource import ResourceSpec, resource_state

    m = max(spec.modes) + 1
    k = spec.k
    space = FockSpace((cutoff,) * m + (ancilla_cutoff,) * (2 * k))
    first = BeamSplitterParams(dev.T1, dev.R1)
    second = BeamSplitterParams(dev.T2, dev.R2)
    net = Network(space)
    control, prep, bra = [], {}, {}
    for l, (j, s) in enumerate(spec.factors):
        a1, a2 = m + 2 * l, m + 2 * l + 1
        net = net.bs(j, a1, first).bs(a2, a1, second)
        if s == 0:
            control.append(a2)
            prep[a1] = 0
            bra.update({a1: 0, a2: 1})
        else:
            control.append(a1)
            prep[a2] = 0
            bra.update({a1: 0, a2: 0})
    psi = resource_state(ResourceSpec(spec.bits, z), ancilla_cutoff)
    prep[tuple(control)] = psi
    return net.conditional(prep, bra)


# -- polynomials ----------------------------------------------------------------

def interpolation_poly(points: Sequence[complex], values: Sequence[complex]) -> np.ndarray:
    """Ascending coefficients of the interpolating polynomial (Newton form, expanded)."""
    x = np.asarray(points, dtype=complex)
    y = np.asarray(values, dtype=complex)
    if x.shape != y.shape or x.ndim != 1 or x.size == 0:
        raise DomainError("points and values must be equal-length non-empty lists")
    scale = max(1.0, float(np.max(np.abs(x))))
    for i in range(x.size):
        for j in range(i):
            if abs(x[i] - x[j]) <= NODE_TOL * scale:
                raise NodeCollisionError(f"interpolation nodes {i} and {j} coincide ({x[i]})")
    d = y.copy()
    for level in range(1, x.size):
        d[level:] = (d[level:] - d[level - 1:-1]) / (x[level:] - x[:-level])
    coeffs = np.array([d[-1]], dtype=complex)
    for i in range(x.size - 2, -1, -1):
        coeffs = P.polyadd(P.polymul(coeffs, [-x[i], 1.0]), [d[i]])
    out = np.zeros(x.size, dtype=complex)
    out[: coeffs.size] = coeffs
    return out


def effective_degree(coeffs: Sequence[complex], tol: float = COEFF_TOL) -> int:
    c = np.asarray(coeffs, dtype=complex)
    big = float(np.max(np.abs(c), initial=0.0))
    if big == 0.0:
        return -1
    nz = np.nonzero(np.abs(c) > tol * big)[0]
    return int(nz[-1])


def polynomial_roots(coeffs: Sequence[complex]) -> np.ndarray:
    """Roots from companion-matrix eigenvalues, one Newton step each, sorted by (|r|, arg r)."""
    c = np.asarray(coeffs, dtype=complex)
    deg = effective_degree(c)
    if deg < 0:
        raise DegreeError("the zero polynomial has no root schedule")
    c = c[: deg + 1]
    if deg == 0:
        return np.zeros(0, dtype=complex)
    roots = P.polyroots(c).astype(complex)
    dc = P.polyder(c)
    with np.errstate(all="ignore"):
        for i, r in enumerate(roots):
            d = P.polyval(r, dc)
            if d == 0:
                continue
            polished = r - P.polyval(r, c) / d
            # keep the eigenvalue when the step is unusable (e.g. subnormal derivative)
            if cmath.isfinite(polished) and abs(P.polyval(polished, c)) <= abs(P.polyval(r, c)):
                roots[i] = polished
    order = sorted(range(roots.size), key=lambda i: (round(abs(roots[i]), 12), cmath.phase(roots[i])))
    return roots[order]


# -- schedules ------------------------------------------------------------------

@dataclass(frozen=True)
class Stage:
    """One pass ``alpha * T1**(sum n over t_modes) * (A + beta)``.

    An ``"attenuation"`` stage drops the binomial and acts as ``alpha * T``.
    ``device`` records the physical settings realising the stage, or is
    ``None`` for an abstract stage that stores only ``beta``.
    """

    algebra: object
    beta: complex
    alpha: complex
    gamma: complex
    T1: complex
    t_modes: tuple[int, ...]
    device: Mapping[str, complex] | None = None
    kind: str = "binomial"

    @property
    def abstract(self) -> bool:
        return self.device is None

    def operator(self, space: FockSpace) -> OperatorMatrix:
        t = t_operator(space, self.t_modes, self.T1)
        if self.kind == "attenuation":
            return self.alpha * t
        return self.alpha * (t @ (self.algebra.operator(space) + self.beta))


@dataclass(frozen=True)
class SynthesisSchedule:
    stages: tuple[Stage, ...]
    leading: complex = 1.0
    prefactor: complex = 1.0
    meta: Mapping[str, object] = field(default_factory=dict)

    @property
    def gammas(self) -> tuple[complex, ...]:
        return tuple(s.gamma for s in self.stages)

    @property
    def alpha_product(self) -> complex:
        return complex(np.prod([s.alpha for s in self.stages])) if self.stages else 1.0

    def __len__(self) -> int:
        return len(self.stages)


def compose_schedule(space: FockSpace, schedule: SynthesisSchedule) -> OperatorMatrix:
    """Ordered product of the stage operators, first stage rightmost."""
    op = identity(space)
    for st in schedule.stages:
        op = st.operator(space) @ op
    return op


def poly_operator(space: FockSpace, algebra, coeffs: Sequence[complex]) -> OperatorMatrix:
    a = algebra.operator(space)
    out = identity(space) * 0.0
    for c in reversed(list(coeffs)):
        out = a @ out + c
    return out


def roots_to_schedule(coeffs: Sequence[complex], algebra, T1: complex = 1.0,
                      device: JointDevice | None = None,
                      t_modes: Sequence[int] | None = None) -> SynthesisSchedule:
    """Stages whose product is ``gamma**(N(N-1)/2) (prod alpha) / f_N * T**N * F_N(A)``.

    With ``device`` given each stage's resource weight is solved so the joint
    device realises the needed ``beta``; otherwise stages are abstract with
    ``alpha = 1``.
    """
    c = np.asarray(coeffs, dtype=complex)
    deg = effective_degree(c)
    if deg < 0:
        raise DegreeError("the zero polynomial has no root schedule")
    roots = polynomial_roots(c)
    gamma = complex(algebra.gamma(T1))
    t_modes = tuple(algebra.t_modes if t_modes is None else t_modes)
    stages = []
    for n, r in enumerate(roots, start=1):
        beta = -r * gamma ** (n - 1)
        alpha, dev = 1.0, None
        if device is not None and isinstance(algebra, MonomialSpec):
            try:
                z = solve_resource_weight(algebra, device, beta)
                alpha, beta_check = stage_coefficients(algebra, device, z)
                dev = {"T1": device.T1, "R1": device.R1, "T2": device.T2, "R2": device.R2, "z": z}
                beta = beta_check
            except (InfeasibleError, SingularParameterError):
                alpha, dev = 1.0, None
        stages.append(Stage(algebra, complex(beta), complex(alpha), gamma, complex(T1), t_modes, dev))
    sched = SynthesisSchedule(tuple(stages), complex(c[deg]))
    N = len(stages)
    pref = gamma ** (N * (N - 1) // 2) * sched.alpha_product / c[deg]
    return SynthesisSchedule(sched.stages, complex(c[deg]), complex(pref),
                             {"coefficients": tuple(complex(v) for v in c[: deg + 1])})


# -- photon-number functions ----------------------------------------------------

def number_device(T1: complex, R1: complex, beta_dev: complex) -> tuple[complex, dict]:
    """Second coupler realising ``alpha T1**n (n - beta_dev)`` on the number stage.

    The control ports carry one photon split evenly over both ancillas.
    """
    T1, R1 = complex(T1), complex(R1)
    if R1 == 0 or T1 == 0:
        raise InfeasibleError("the number stage needs 0 < |T1| < 1")
    q = complex(beta_dev) * abs(R1) ** 2 / T1 - T1.conjugate()
    R2 = 1.0 / math.sqrt(1.0 + abs(q) ** 2)
    T2 = q * R2
    alpha = -R2 * abs(R1) ** 2 / (math.sqrt(2.0) * T1)
    return alpha, {"T1": T1, "R1": R1, "T2": T2, "R2": complex(R2)}


def number_stage_network(T1: complex, R1: complex, T2: complex, R2: complex,
                         cutoff: int, ancilla_cutoff: int = 2) -> OperatorMatrix:
    """Simulated number stage: one device whose ancillas share a split photon."""
    from .resource import ResourceSpec, resource_state

    space = FockSpace((cutoff, ancilla_cutoff, ancilla_cutoff))
    net = (Network(space).bs(0, 1, BeamSplitterParams(T1, R1))
           .bs(2, 1, BeamSplitterParams(T2, R2)))
    psi = resource_state(ResourceSpec((0, 1), 1.0), ancilla_cutoff)
    return net.conditional({(1, 2): psi}, {1: 0, 2: 1})


def attenuation_device(T1: complex, R1: complex) -> tuple[complex, dict]:
    """Number stage with the second coupler removed: ``T1**n / sqrt(2)``."""
    return 1.0 / math.sqrt(2.0), {"T1": complex(T1), "R1": complex(R1), "T2": 1.0 + 0j, "R2": 0j}


def photon_number_schedule(values: Sequence[complex], N: int | None = None, T1: complex = 1.0,
                           R1: complex | None = None, mode: int = 0) -> SynthesisSchedule:
    """``N`` stages acting as ``F(n)`` on number states ``n = 0..N``, up to a scalar.

    ``values`` are ``F(0), ..., F(N)``.  Each stage has the form
    ``alpha T1**n (n - beta_dev)``; the node values are pre-divided by
    ``T1**(N l)`` so the accumulated attenuation cancels.  When the node
    polynomial has degree below ``N`` the missing stages are pure
    attenuation passes (dropped altogether when ``T1 = 1``).
    """
    vals = np.asarray(values, dtype=complex)
    if N is None:
        N = vals.size - 1
    if vals.size != N + 1:
        raise DomainError(f"need {N + 1} values, got {vals.size}")
    if np.all(vals == 0):
        raise DegreeError("F vanishes on every node")
    T1 = complex(T1)
    if T1 == 0:
        raise DomainError("T1 must be nonzero")
    if R1 is None:
        R1 = math.sqrt(max(0.0, 1.0 - abs(T1) ** 2))
    R1 = complex(R1)
    BeamSplitterParams(T1, R1)
    nodes = np.arange(N + 1)
    coeffs = interpolation_poly(nodes, vals * T1 ** (-N * nodes.astype(float)))
    deg = effective_degree(coeffs)
    algebra = MonomialSpec.number(mode)
    base = roots_to_schedule(coeffs[: deg + 1], algebra, T1, None, (mode,))
    stages = []
    for st in base.stages:
        try:
            alpha, dev = number_device(T1, R1, -st.beta)
        except InfeasibleError:
            alpha, dev = 1.0, None
        stages.append(Stage(algebra, st.beta, complex(alpha), 1.0, T1, (mode,), dev))
    if T1 != 1:
        for _ in range(N - deg):
            alpha, dev = attenuation_device(T1, R1) if R1 != 0 else (1.0, None)
            stages.append(Stage(algebra, 0j, complex(alpha), 1.0, T1, (mode,), dev, "attenuation"))
    alpha_prod = complex(np.prod([s.alpha for s in stages])) if stages else 1.0
    return SynthesisSchedule(tuple(stages), base.leading, alpha_prod / base.leading,
                             {"coefficients": base.meta["coefficients"], "N": N, "degree": deg})


def number_poly_leading(values: Sequence[complex], T1: complex) -> complex:
    """Closed-form leading coefficient of the node polynomial (alternating binomial sum)."""
    vals = np.asarray(values, dtype=complex)
    N = vals.size - 1
    s = sum(math.comb(N, l) * (-complex(T1) ** N) ** (-l) * vals[l] for l in range(N + 1))
    return (-1) ** N / math.factorial(N) * s


def exponential_zn_schedule(z: complex, N: int, T1: complex = 1.0,
                            R1: complex | None = None, mode: int = 0) -> SynthesisSchedule:
    """``z**n`` on number states ``0..N``."""
    z = complex(z)
    if N < 0:
        raise DomainError("N must be non-negative")
    vals = z ** np.arange(N + 1, dtype=float) if z != 0 else np.eye(1, N + 1)[0]
    return photon_number_schedule(vals, N, T1, R1, mode)


def exponential_zn_prefactor(z: complex, N: int, T1: complex, alpha_product: complex) -> complex:
    """``(prod alpha) N! (z / T1**N - 1)**(-N)`` for a full-degree schedule."""
    w = complex(z) / complex(T1) ** N - 1.0
    if w == 0:
        raise SingularParameterError("z = T1**N collapses the schedule to degree 0")
    return alpha_product * math.factorial(N) * w ** (-N)


def binomial_series_coefficients(w: complex, N: int) -> np.ndarray:
    """Ascending power coefficients of ``sum_k w**k C(n, k)`` for ``k <= N``."""
    out = np.zeros(N + 1, dtype=complex)
    for k in range(N + 1):
        falling = np.array([1.0 + 0j])
        for j in range(k):
            falling = P.polymul(falling, [-j, 1.0])
        out[: falling.size] += w ** k * falling / math.factorial(k)
    return out


# -- general operator ladder ----------------------------------------------------

def _drop_zero_terms(terms):
    kept = [(complex(c), a) for c, a in terms if complex(c) != 0]
    return kept


def general_ladder(terms: Sequence[tuple[complex, MonomialSpec]], N: int,
                   T1: complex = 1.0) -> SynthesisSchedule:
    """Trotter-like ladder approximating ``exp(sum c_n A_n)``.

    With ``L`` nonzero terms and ``N`` repetitions the schedule has ``L*N``
    abstract stages cycling through the terms, with
    ``beta_n = N / c * gamma_n**(n-1)`` so that the product equals
    ``(prod alpha beta) T**(L N) [prod_n (1 + c_n A_n / N)]**N``.
    """
    if N < 1:
        raise DomainError("N must be at least 1")
    kept = _drop_zero_terms(terms)
    if not kept:
        return SynthesisSchedule((), 1.0, 1.0, {"terms": 0, "N": N})
    L = len(kept)
    stages = []
    for n in range(1, L * N + 1):
        c, a = kept[(n - 1) % L]
        g = complex(a.gamma(T1))
        beta = N / c * g ** (n - 1)
        stages.append(Stage(a, complex(beta), 1.0, g, complex(T1), tuple(a.t_modes), None))
    pref = complex(np.prod([s.alpha * s.beta for s in stages]))
    return SynthesisSchedule(tuple(stages), 1.0, pref, {"terms": L, "N": N})


def ladder_product(space: FockSpace, terms: Sequence[tuple[complex, MonomialSpec]], N: int) -> OperatorMatrix:
    """``[prod_n (1 + c_n A_n / N)]**N`` with the first term rightmost."""
    one = identity(space)
    step = one
    for c, a in _drop_zero_terms(terms):
        step = (one + a.operator(space) * (c / N)) @ step
    return step ** N
