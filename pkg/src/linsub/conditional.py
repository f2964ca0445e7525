"""Conditional (post-selected) operators of beam-splitter networks.

The local device has a signal mode 0 and ancilla modes 1 and 2, coupled by
``U_01(T1, R1)`` followed by ``U_21(T2, R2)``.  In case 0 mode 2 carries the
control state ``|s>`` and detectors see (0, 1) photons in modes (1, 2); in
case 1 mode 1 carries ``|s>`` and both detectors see vacuum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError, SingularParameterError
from .fock import (FockSpace, ModeKey, OperatorMatrix, StateVector, _as_modes,
                   annihilation, contract, creation, power_of_number)
from .optics import BeamSplitterParams, Network


@dataclass(frozen=True)
class DetectionPattern:
    """Ideal photon-number-resolving outcomes, mode -> count."""

    assignments: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(m): int(c) for m, c in dict(self.assignments).items()}
        if any(c < 0 for c in clean.values()):
            raise DomainError(f"negative photon count in {clean}")
        object.__setattr__(self, "assignments", clean)

    def validate(self, space: FockSpace) -> None:
        for mode, count in self.assignments.items():
            if count > space.cutoffs[space.check_mode(mode)]:
                raise DomainError(f"count {count} exceeds cutoff of mode {mode}")


def conditional_operator(net: Union[OperatorMatrix, Network],
                         prep: Mapping[ModeKey, StateVector | int],
                         pattern: Union[DetectionPattern, Mapping[ModeKey, StateVector | int]],
                         signal_modes: Sequence[int]) -> OperatorMatrix:
    """Operator effected on ``signal_modes`` by a prepared, detected network.

    Unnormalised: it carries every amplitude prefactor of the outcome.
    """
    space = net.space if isinstance(net, Network) else net.in_space
    if isinstance(pattern, DetectionPattern):
        pattern.validate(space)
        bra = dict(pattern.assignments)
    else:
        bra = dict(pattern)
    prepared = {m for key in prep for m in _as_modes(key)}
    detected = {m for key in bra for m in _as_modes(key)}
    survivors_in = [m for m in range(space.num_modes) if m not in prepared]
    survivors_out = [m for m in range(space.num_modes) if m not in detected]
    signal = sorted(int(m) for m in signal_modes)
    if survivors_in != signal or survivors_out != signal:
        raise DomainError(
            f"signal modes {signal} differ from unprepared {survivors_in} / undetected {survivors_out} modes")
    if isinstance(net, Network):
        return net.conditional(prep, bra)
    return contract(net, prep, bra)


def success_probability(Y: OperatorMatrix, psi: StateVector) -> float:
    """``<psi| Y^dagger Y |psi>``."""
    if Y.in_space != psi.space:
        raise DimensionError(f"operator expects {Y.in_space.cutoffs}, state lives on {psi.space.cutoffs}")
    out = Y.entries @ psi.amplitudes
    return float(np.vdot(out, out).real)


@dataclass(frozen=True)
class DeviceSpec:
    case: int
    s: int
    T1: complex
    R1: complex
    T2: complex = 1.0
    R2: complex = 0.0

    def __post_init__(self):
        if self.case not in (0, 1) or self.s not in (0, 1):
            raise DomainError("case and s must be 0 or 1")
        # validates |T|^2 + |R|^2 = 1
        self.first, self.second

    @property
    def first(self) -> BeamSplitterParams:
        return BeamSplitterParams(self.T1, self.R1)

    @property
    def second(self) -> BeamSplitterParams:
        return BeamSplitterParams(self.T2, self.R2)

    def prep(self) -> dict[int, int]:
        return {1: 0, 2: self.s} if self.case == 0 else {1: self.s, 2: 0}

    def pattern(self) -> DetectionPattern:
        return DetectionPattern({1: 0, 2: 1} if self.case == 0 else {1: 0, 2: 0})


def device_network(spec: DeviceSpec, cutoff: int, ancilla_cutoff: int = 2) -> Network:
    space = FockSpace((cutoff, ancilla_cutoff, ancilla_cutoff))
    return Network(space).bs(0, 1, spec.first).bs(2, 1, spec.second)


def device_operator(spec: DeviceSpec, cutoff: int, ancilla_cutoff: int = 2) -> OperatorMatrix:
    """Conditional operator of the device by direct network simulation."""
    net = device_network(spec, cutoff, ancilla_cutoff)
    return conditional_operator(net, spec.prep(), spec.pattern(), [0])


def device_closed_form(spec: DeviceSpec, cutoff: int) -> OperatorMatrix:
    """Closed form of the device operator on a single mode.

    case 0: ``R2 (T2/R2)^s T1^n (-R1* a)^(1-s)``;
    case 1: ``T1^n (R1 a^dagger / T1)^s``.
    """
    space = FockSpace((cutoff,))
    T1, R1, T2, R2 = (complex(v) for v in (spec.T1, spec.R1, spec.T2, spec.R2))
    t_pow = power_of_number(space, T1, [0])
    if spec.case == 0:
        if spec.s == 1:
            if R2 == 0:
                raise SingularParameterError("case 0 with s = 1 needs R2 != 0 in the closed form")
            return t_pow * (R2 * (T2 / R2))
        return (t_pow @ annihilation(space, 0)) * (-R2 * R1.conjugate())
    if spec.s == 0:
        return t_pow
    if T1 == 0:
        raise SingularParameterError("case 1 with s = 1 needs T1 != 0 in the closed form")
    return (t_pow @ creation(space, 0)) * (R1 / T1)

