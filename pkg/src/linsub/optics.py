"""Beam splitters, phase shifters and networks of local elements.

Convention for a coupler between modes ``j`` and ``k``::

    U^dagger (a_j, a_k)^T U = P [[T, R], [-R*, T*]] (a_j, a_k)^T

``U`` is built as ``exp(sum_pq K_pq a_p^dagger a_q)`` with ``K`` the principal
logarithm of the 2x2 mode matrix, which fixes ``U|0,0> = |0,0>``.  Matrix
elements between truncated basis states are exact; unitarity (and the
Heisenberg relation) hold on two-mode blocks with ``n_j + n_k <= min(D_j, D_k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from .errors import DomainError, SingularParameterError
from .fock import (FockSpace, ModeKey, OperatorMatrix, StateVector, _as_modes,
                   _check_groups, _group_vector, _reduced, annihilation, apply_local,
                   diagonal_operator, embed, total_mask)

PARAM_TOL = 1e-12


@dataclass(frozen=True)
class BeamSplitterParams:
    """Complex transmittance, reflectance and phase of a coupler."""

    T: complex
    R: complex
    P: complex = 1.0

    def __post_init__(self):
        for name in ("T", "R", "P"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if abs(abs(self.T) ** 2 + abs(self.R) ** 2 - 1.0) >= PARAM_TOL:
            raise DomainError(f"|T|^2 + |R|^2 = {abs(self.T)**2 + abs(self.R)**2} != 1")
        if abs(abs(self.P) ** 2 - 1.0) >= PARAM_TOL:
            raise DomainError(f"|P| = {abs(self.P)} != 1")

    @classmethod
    def from_ratio(cls, q: complex, P: complex = 1.0) -> "BeamSplitterParams":
        """Parameters with ``T/R = q`` and real positive ``R``."""
        r = 1.0 / math.sqrt(1.0 + abs(q) ** 2)
        return cls(q * r, r, P)

    @classmethod
    def from_reflectance_ratio(cls, xi: complex, P: complex = 1.0) -> "BeamSplitterParams":
        """Parameters with ``R/T = xi`` and real positive ``T``."""
        t = 1.0 / math.sqrt(1.0 + abs(xi) ** 2)
        return cls(t, xi * t, P)

    def mode_matrix(self) -> np.ndarray:
        return self.P * np.array([[self.T, self.R], [-self.R.conjugate(), self.T.conjugate()]])

    def conj(self) -> "BeamSplitterParams":
        return BeamSplitterParams(self.T.conjugate(), self.R.conjugate(), self.P.conjugate())

    def inverse(self) -> "BeamSplitterParams":
        """Parameters of the adjoint coupler."""
        return BeamSplitterParams(self.T.conjugate(), -self.R, self.P.conjugate())


BALANCED = BeamSplitterParams(1 / math.sqrt(2), 1 / math.sqrt(2))
BALANCED_MINUS = BeamSplitterParams(1 / math.sqrt(2), -1 / math.sqrt(2))
IDENTITY_PARAMS = BeamSplitterParams(1.0, 0.0)


def _log_unitary(v: np.ndarray) -> np.ndarray:
    # complex Schur form of a normal matrix is diagonal; W is unitary even
    # for degenerate eigenvalues, unlike a plain eig decomposition
    d, w = scipy.linalg.schur(v, output="complex")
    phases = np.angle(np.diag(d))
    return w @ np.diag(1j * phases) @ w.conj().T


def passive_generator(mode_log: np.ndarray, cutoffs: Sequence[int]) -> np.ndarray:
    """``sum_pq K_pq a_p^dagger a_q`` on the local space of ``len(cutoffs)`` modes."""
    local = FockSpace(tuple(cutoffs))
    a = [annihilation(local, m).entries for m in range(local.num_modes)]
    g = np.zeros((local.dim, local.dim), dtype=complex)
    for p in range(local.num_modes):
        for q in range(local.num_modes):
            if mode_log[p, q] != 0:
                g += mode_log[p, q] * (a[p].conj().T @ a[q])
    return g


def exact_block(generator, cutoffs: Sequence[int], big_cutoffs: Sequence[int]) -> np.ndarray:
    """``expm`` of a number-conserving generator, sliced to ``cutoffs``.

    The exponential is taken on a space large enough that every block
    reachable from the truncated space is complete, so the returned matrix
    elements are exact; the slice itself is not unitary at the top levels.
    """
    big = FockSpace(tuple(big_cutoffs))
    u = scipy.linalg.expm(generator(big))
    keep = np.all(big.occupations <= np.array(cutoffs), axis=1)
    return u[np.ix_(keep, keep)]


def bs_local(cutoff_j: int, cutoff_k: int, params: BeamSplitterParams) -> np.ndarray:
    """Coupler matrix on the two-mode space (mode j least significant)."""
    k = _log_unitary(params.mode_matrix())
    top = cutoff_j + cutoff_k
    return exact_block(lambda big: passive_generator(k, big.cutoffs),
                       (cutoff_j, cutoff_k), (top, top))


def bs_unitary(space: FockSpace, j: int, k: int, params: BeamSplitterParams) -> OperatorMatrix:
    if j == k:
        raise DomainError("a beam splitter needs two distinct modes")
    j, k = space.check_mode(j), space.check_mode(k)
    return embed(space, bs_local(space.cutoffs[j], space.cutoffs[k], params), [j, k])


def safe_pair_mask(space: FockSpace, j: int, k: int) -> np.ndarray:
    """Inputs whose two-mode block is complete under truncation."""
    return total_mask(space, [j, k], min(space.cutoffs[j], space.cutoffs[k]))


def heisenberg_residual(U: OperatorMatrix, params: BeamSplitterParams, j: int, k: int) -> float:
    """Max-norm violation of the defining relation on the safe subspace."""
    space = U.in_space
    aj, ak = annihilation(space, j).entries, annihilation(space, k).entries
    u = U.entries
    lhs_j = u.conj().T @ aj @ u
    lhs_k = u.conj().T @ ak @ u
    m = params.mode_matrix()
    rhs_j = m[0, 0] * aj + m[0, 1] * ak
    rhs_k = m[1, 0] * aj + m[1, 1] * ak
    mask = safe_pair_mask(space, j, k)
    res = max(np.max(np.abs((lhs_j - rhs_j)[:, mask]), initial=0.0),
              np.max(np.abs((lhs_k - rhs_k)[:, mask]), initial=0.0))
    return float(res)


def exp_series(x: np.ndarray, tol: float = 1e-14, max_terms: int = 500) -> np.ndarray:
    """Taylor series of ``exp(x)``, stopped once a term's max-norm is below ``tol``."""
    out = np.eye(x.shape[0], dtype=complex)
    term = out.copy()
    for m in range(1, max_terms):
        term = term @ x / m
        out = out + term
        if np.max(np.abs(term), initial=0.0) < tol:
            return out
    raise DomainError("exponential series did not converge")


def _power_of_number(c: complex, n: np.ndarray) -> np.ndarray:
    return np.array([c ** int(v) for v in n], dtype=complex)


def bs_factorized(space: FockSpace, j: int, k: int, T: complex, R: complex, P: complex = 1.0) -> OperatorMatrix:
    """Normal-ordered product form of the coupler.

    ``(P T)^{n_j} exp(-P R* a_k^dag a_j) exp(P* R a_j^dag a_k) (P* T)^{-n_k}``
    """
    T, R, P = complex(T), complex(R), complex(P)
    if abs(T) == 0.0:
        raise SingularParameterError("factorised coupler is singular for T = 0; compose two couplers instead")
    occ = space.occupations
    aj, ak = annihilation(space, j).entries, annihilation(space, k).entries
    left = np.diag(_power_of_number(P * T, occ[:, j]))
    right = np.diag(_power_of_number(1.0 / (P.conjugate() * T), occ[:, k]))
    e1 = exp_series(-P * R.conjugate() * (ak.conj().T @ aj))
    e2 = exp_series(P.conjugate() * R * (aj.conj().T @ ak))
    return OperatorMatrix.on(space, left @ e1 @ e2 @ right)


def compose_params(p2: BeamSplitterParams, p1: BeamSplitterParams) -> BeamSplitterParams:
    """Parameters of ``U(p2) U(p1)`` (``p1`` acts first)."""
    return BeamSplitterParams(
        p2.T * p1.T - p2.R * p1.R.conjugate(),
        p2.T * p1.R + p2.R * p1.T.conjugate(),
        p2.P * p1.P,
    )


def phase_local(cutoff: int, phi: float) -> np.ndarray:
    return np.diag(np.exp(1j * phi * np.arange(cutoff + 1)))


def phase_shifter(space: FockSpace, mode: int, phi: float) -> OperatorMatrix:
    mode = space.check_mode(mode)
    return diagonal_operator(space, np.exp(1j * phi * space.occupations[:, mode]))


def cross_kerr_local(cutoff_j: int, cutoff_k: int, phi: float) -> np.ndarray:
    """``exp(i phi n_j n_k)`` on the two-mode space."""
    occ = FockSpace((cutoff_j, cutoff_k)).occupations
    return np.diag(np.exp(1j * phi * occ[:, 0] * occ[:, 1]))


@dataclass(frozen=True)
class Element:
    kind: str
    modes: tuple[int, ...]
    local: np.ndarray = field(repr=False)
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Network:
    """Ordered sequence of local elements on a fixed space; first element acts first.

    Builder methods return a new network.
    """

    space: FockSpace
    elements: tuple[Element, ...] = ()

    def _with(self, el: Element) -> "Network":
        for m in el.modes:
            self.space.check_mode(m)
        return Network(self.space, self.elements + (el,))

    def bs(self, j: int, k: int, params: BeamSplitterParams) -> "Network":
        if j == k:
            raise DomainError("a beam splitter needs two distinct modes")
        local = bs_local(self.space.cutoffs[j], self.space.cutoffs[k], params)
        return self._with(Element("bs", (j, k), local, {"params": params}))

    def phase(self, mode: int, phi: float) -> "Network":
        return self._with(Element("phase", (mode,), phase_local(self.space.cutoffs[mode], phi), {"phi": phi}))

    def kerr(self, j: int, k: int, phi: float) -> "Network":
        local = cross_kerr_local(self.space.cutoffs[j], self.space.cutoffs[k], phi)
        return self._with(Element("kerr", (j, k), local, {"phi": phi}))

    def local(self, matrix: np.ndarray, modes: Sequence[int], kind: str = "local") -> "Network":
        return self._with(Element(kind, tuple(modes), np.asarray(matrix, dtype=complex)))

    def then(self, other: "Network") -> "Network":
        if other.space != self.space:
            raise DomainError("networks act on different spaces")
        return Network(self.space, self.elements + other.elements)

    def _run(self, block: np.ndarray) -> np.ndarray:
        for el in self.elements:
            block = apply_local(self.space, block, el.local, el.modes)
        return block

    def apply(self, state: StateVector) -> StateVector:
        if state.space != self.space:
            raise DomainError("state lives on a different space")
        return StateVector(self.space, self._run(state.amplitudes), state.tail_weight)

    def matrix(self) -> OperatorMatrix:
        return OperatorMatrix.on(self.space, self._run(np.eye(self.space.dim, dtype=complex)))

    def conditional(self, prep: Mapping[ModeKey, StateVector | int],
                    bra: Mapping[ModeKey, StateVector | int]) -> OperatorMatrix:
        """Same result as ``contract(self.matrix(), prep, bra)`` without the full matrix."""
        space = self.space
        m = space.num_modes
        prep_modes = _check_groups(space, prep)
        bra_modes = _check_groups(space, bra)
        free = [j for j in range(m) if j not in prep_modes]
        t = np.ones((), dtype=complex)
        axes: list[int] = []
        for key, val in prep.items():
            modes = _as_modes(key)
            t = np.multiply.outer(t, space.sub(modes).to_tensor(_group_vector(space, modes, val)))
            axes.extend(modes)
        for f in free:
            t = np.multiply.outer(t, np.eye(space.dims[f], dtype=complex))
            axes.extend([f, m + f])
        order = np.argsort(axes)
        t = np.transpose(t, order) if axes else t
        in_space = _reduced(space, free)
        block = np.reshape(t, (space.dim, in_space.dim), order="F")
        block = self._run(block)
        t = np.reshape(block, space.dims + tuple(space.dims[f] for f in free), order="F")
        ops: list = [t, list(range(m + len(free)))]
        for key, val in bra.items():
            modes = _as_modes(key)
            ops += [space.sub(modes).to_tensor(_group_vector(space, modes, val).conj()), list(modes)]
        out_modes = [j for j in range(m) if j not in bra_modes]
        res = np.einsum(*ops, out_modes + list(range(m, m + len(free))), optimize=True)
        out_space = _reduced(space, out_modes)
        return OperatorMatrix(in_space, out_space, np.reshape(res, (out_space.dim, in_space.dim), order="F"))

