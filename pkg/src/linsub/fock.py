"""Truncated multimode Fock spaces, states and operators.

Basis ordering is mixed radix with mode 0 least significant:
``rank = sum_j n_j * prod_{k<j} (D_k + 1)``.  Internally a vector over a
space is reshaped with ``order="F"`` into a tensor whose axis ``j`` is the
occupation of mode ``j``.

Creation operators are truncated: ``a^dagger |D> = 0``.  Identities that
involve ``a^dagger`` are therefore only exact on inputs whose image stays
below the cutoff; :func:`leakage` quantifies that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .errors import DimensionError, DomainError

MultiIndex = tuple[int, ...]

_MAX_DIM = 2**31 - 1


@dataclass(frozen=True)
class FockSpace:
    """Product of single-mode spaces truncated at ``cutoffs[j]`` photons."""

    cutoffs: tuple[int, ...]

    def __post_init__(self):
        cutoffs = tuple(int(d) for d in self.cutoffs)
        if len(cutoffs) < 1:
            raise DomainError("a Fock space needs at least one mode")
        if any(d < 0 for d in cutoffs):
            raise DomainError(f"negative cutoff in {cutoffs}")
        if math.prod(d + 1 for d in cutoffs) > _MAX_DIM:
            raise DomainError(f"dimension of {cutoffs} exceeds the index range")
        object.__setattr__(self, "cutoffs", cutoffs)

    @classmethod
    def uniform(cls, num_modes: int, cutoff: int) -> "FockSpace":
        return cls((cutoff,) * num_modes)

    @property
    def num_modes(self) -> int:
        return len(self.cutoffs)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(d + 1 for d in self.cutoffs)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        out, acc = [], 1
        for d in self.dims:
            out.append(acc)
            acc *= d
        return tuple(out)

    @cached_property
    def occupations(self) -> np.ndarray:
        """``(dim, num_modes)`` integer array; row ``r`` is ``unrank(r)``."""
        r = np.arange(self.dim)
        cols = [(r // s) % d for s, d in zip(self.strides, self.dims)]
        occ = np.stack(cols, axis=1)
        occ.setflags(write=False)
        return occ

    def check_mode(self, mode: int) -> int:
        if not 0 <= mode < self.num_modes:
            raise DomainError(f"mode {mode} not in a {self.num_modes}-mode space")
        return int(mode)

    def rank(self, idx: Sequence[int]) -> int:
        idx = tuple(int(n) for n in idx)
        if len(idx) != self.num_modes:
            raise DomainError(f"occupation {idx} has wrong length for {self.num_modes} modes")
        for n, d in zip(idx, self.cutoffs):
            if not 0 <= n <= d:
                raise DomainError(f"occupation {idx} outside cutoffs {self.cutoffs}")
        return sum(n * s for n, s in zip(idx, self.strides))

    def unrank(self, r: int) -> MultiIndex:
        if not 0 <= r < self.dim:
            raise DomainError(f"rank {r} outside [0, {self.dim})")
        return tuple(int((r // s) % d) for s, d in zip(self.strides, self.dims))

    def basis(self) -> Iterator[MultiIndex]:
        for r in range(self.dim):
            yield self.unrank(r)

    def sub(self, modes: Sequence[int]) -> "FockSpace":
        """Space of the listed modes, in the listed order."""
        return FockSpace(tuple(self.cutoffs[self.check_mode(m)] for m in modes))

    def without(self, modes: Iterable[int]) -> "FockSpace":
        drop = set(modes)
        return FockSpace(tuple(d for m, d in enumerate(self.cutoffs) if m not in drop))

    def to_tensor(self, vec: np.ndarray) -> np.ndarray:
        return np.reshape(vec, self.dims + vec.shape[1:], order="F")


def basis_rank(space: FockSpace, idx: Sequence[int]) -> int:
    return space.rank(idx)


def basis_unrank(space: FockSpace, r: int) -> MultiIndex:
    return space.unrank(r)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over ``space``; may be subnormalised after conditioning.

    ``tail_weight`` records probability mass dropped by truncation when the
    state was prepared (coherent states are not renormalised).
    """

    space: FockSpace
    amplitudes: np.ndarray
    tail_weight: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes).reshape(-1)
        if amps.shape != (self.space.dim,):
            raise DimensionError(f"{amps.size} amplitudes for a space of dimension {self.space.dim}")
        if not np.all(np.isfinite(amps)):
            raise DomainError("non-finite amplitude")
        if not self.tail_weight >= 0.0:
            raise DomainError("tail_weight must be non-negative")
        object.__setattr__(self, "amplitudes", _frozen(amps))
        object.__setattr__(self, "tail_weight", float(self.tail_weight))

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def normalized(self) -> "StateVector":
        n = math.sqrt(self.norm2)
        if n == 0.0:
            raise DomainError("cannot normalise the zero vector")
        return StateVector(self.space, self.amplitudes / n, self.tail_weight)

    def tensor(self) -> np.ndarray:
        return self.space.to_tensor(self.amplitudes)

    def amplitude(self, idx: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.space.rank(idx)])

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(self.space, self.amplitudes * c, self.tail_weight)

    __rmul__ = __mul__

    def __add__(self, other: "StateVector") -> "StateVector":
        if other.space != self.space:
            raise DimensionError("adding states on different spaces")
        return StateVector(self.space, self.amplitudes + other.amplitudes,
                           self.tail_weight + other.tail_weight)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + other * -1.0


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense matrix from ``in_space`` to ``out_space``."""

    in_space: FockSpace
    out_space: FockSpace
    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries)
        if m.shape != (self.out_space.dim, self.in_space.dim):
            raise DimensionError(
                f"matrix shape {m.shape} does not match "
                f"({self.out_space.dim}, {self.in_space.dim})")
        if not np.all(np.isfinite(m)):
            raise DomainError("non-finite operator entry")
        object.__setattr__(self, "entries", _frozen(m))

    @classmethod
    def on(cls, space: FockSpace, entries: np.ndarray) -> "OperatorMatrix":
        return cls(space, space, entries)

    @property
    def is_square(self) -> bool:
        return self.in_space == self.out_space

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.out_space, self.in_space, self.entries.conj().T)

    @property
    def H(self) -> "OperatorMatrix":
        return self.adjoint()

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return compose(self, other)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    def __mul__(self, c: complex) -> "OperatorMatrix":
        return OperatorMatrix(self.in_space, self.out_space, self.entries * c)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "OperatorMatrix":
        return self * (1.0 / c)

    def __neg__(self) -> "OperatorMatrix":
        return self * -1.0

    def _check_same(self, other: "OperatorMatrix"):
        if self.in_space != other.in_space or self.out_space != other.out_space:
            raise DimensionError("operators act between different spaces")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = identity(self.in_space) * other
        self._check_same(other)
        return OperatorMatrix(self.in_space, self.out_space, self.entries + other.entries)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other if isinstance(other, OperatorMatrix) else -other)

    def __pow__(self, k: int) -> "OperatorMatrix":
        if not self.is_square:
            raise DimensionError("power of a non-square operator")
        return OperatorMatrix(self.in_space, self.out_space,
                              np.linalg.matrix_power(self.entries, int(k)))

    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries).copy()


def compose(a: OperatorMatrix, b: OperatorMatrix) -> OperatorMatrix:
    """``a @ b``: apply ``b`` first."""
    if a.in_space != b.out_space:
        raise DimensionError(f"cannot compose: {b.out_space.cutoffs} -> {a.in_space.cutoffs}")
    return OperatorMatrix(b.in_space, a.out_space, a.entries @ b.entries)


def apply(op: OperatorMatrix, state: StateVector) -> StateVector:
    if op.in_space != state.space:
        raise DimensionError(f"operator expects {op.in_space.cutoffs}, state lives on {state.space.cutoffs}")
    return StateVector(op.out_space, op.entries @ state.amplitudes, state.tail_weight)


def adjoint(op: OperatorMatrix) -> OperatorMatrix:
    return op.adjoint()


# -- elementary operators -----------------------------------------------------

def single_mode_annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff + 1, dtype=float)), k=1).astype(complex)


def embed(space: FockSpace, local: np.ndarray, modes: Sequence[int]) -> OperatorMatrix:
    """Lift ``local`` (acting on ``space.sub(modes)``) to the whole space."""
    modes = [space.check_mode(m) for m in modes]
    eye = np.eye(space.dim, dtype=complex)
    return OperatorMatrix.on(space, apply_local(space, eye, local, modes))


def apply_local(space: FockSpace, block: np.ndarray, local: np.ndarray,
                modes: Sequence[int]) -> np.ndarray:
    """Left-multiply the rows of ``block`` (shape ``(dim, ...)``) by a local operator.

    ``local`` is square on ``space.sub(modes)`` with ``modes[0]`` least
    significant.  Only the touched tensor axes are contracted, so the cost is
    ``dim * local_dim`` per column instead of ``dim**2``.
    """
    modes = list(modes)
    if len(set(modes)) != len(modes):
        raise DomainError(f"repeated mode in {modes}")
    sub = space.sub(modes)
    if local.shape != (sub.dim, sub.dim):
        raise DimensionError(f"local operator shape {local.shape} does not match modes {modes}")
    trailing = block.shape[1:]
    t = space.to_tensor(block)
    lt = np.reshape(local, sub.dims + sub.dims, order="F")
    k = len(modes)
    out = np.tensordot(lt, t, axes=(list(range(k, 2 * k)), modes))
    # tensordot puts the local output axes first; restore mode order
    out = np.moveaxis(out, list(range(k)), modes)
    return np.reshape(out, (space.dim,) + trailing, order="F")


def annihilation(space: FockSpace, mode: int) -> OperatorMatrix:
    mode = space.check_mode(mode)
    return embed(space, single_mode_annihilation(space.cutoffs[mode]), [mode])


def creation(space: FockSpace, mode: int) -> OperatorMatrix:
    return annihilation(space, mode).adjoint()


def number(space: FockSpace, mode: int) -> OperatorMatrix:
    mode = space.check_mode(mode)
    return diagonal_operator(space, space.occupations[:, mode].astype(complex))


def identity(space: FockSpace) -> OperatorMatrix:
    return OperatorMatrix.on(space, np.eye(space.dim, dtype=complex))


def diagonal_operator(space: FockSpace, values: np.ndarray) -> OperatorMatrix:
    return OperatorMatrix.on(space, np.diag(np.asarray(values, dtype=complex)))


def function_of_number(space: FockSpace, func, modes: Sequence[int] | int = 0) -> OperatorMatrix:
    """Diagonal operator ``func(n)``; with several modes, ``func(n_a, n_b, ...)``."""
    if isinstance(modes, int):
        modes = [modes]
    occ = space.occupations
    vals = func(*(occ[:, space.check_mode(m)] for m in modes))
    return diagonal_operator(space, np.broadcast_to(np.asarray(vals, dtype=complex), (space.dim,)))


def scalar_powers(c: complex, n: np.ndarray) -> np.ndarray:
    """``c ** n`` elementwise for integer ``n`` (with ``0 ** 0 = 1``)."""
    c = complex(c)
    return np.array([c ** int(k) if (c != 0 or k >= 0) else np.inf for k in np.ravel(n)],
                    dtype=complex).reshape(np.shape(n))


def power_of_number(space: FockSpace, c: complex, modes: Sequence[int]) -> OperatorMatrix:
    """Diagonal ``c ** (sum of n_j over modes)``; repeated modes count repeatedly."""
    occ = space.occupations
    total = np.zeros(space.dim, dtype=int)
    for m in modes:
        total += occ[:, space.check_mode(m)]
    return diagonal_operator(space, scalar_powers(c, total))


# -- states -------------------------------------------------------------------

def fock_state(space: FockSpace, idx: Sequence[int]) -> StateVector:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.rank(idx)] = 1.0
    return StateVector(space, amps)


def vacuum(space: FockSpace) -> StateVector:
    return fock_state(space, (0,) * space.num_modes)


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Exact Poisson amplitudes ``exp(-|a|^2/2) a^n / sqrt(n!)`` for n <= cutoff."""
    alpha = complex(alpha)
    if not np.isfinite(alpha):
        raise DomainError("coherent amplitude must be finite")
    n = np.arange(cutoff + 1)
    # log-space avoids overflow of alpha**n and n! for large cutoffs
    with np.errstate(divide="ignore"):
        logmag = n * np.log(abs(alpha)) if alpha != 0 else np.where(n == 0, 0.0, -np.inf)
    logmag = logmag - 0.5 * np.array([math.lgamma(k + 1) for k in n]) - 0.5 * abs(alpha) ** 2
    phase = np.exp(1j * n * np.angle(alpha))
    return np.exp(logmag) * phase


def coherent_cutoff(alpha: complex, tail: float = 1e-12) -> int:
    """Smallest cutoff whose Poisson tail for ``|alpha|^2`` is below ``tail``."""
    mean = abs(alpha) ** 2
    d = int(math.ceil(mean + 10.0 * math.sqrt(mean + 1.0)))
    amps = coherent_amplitudes(alpha, d)
    while 1.0 - float(np.sum(np.abs(amps) ** 2)) > tail:
        d += 2
        amps = coherent_amplitudes(alpha, d)
    return d


def coherent_state(space: FockSpace, mode: int, alpha: complex) -> StateVector:
    """Coherent state in ``mode``, vacuum elsewhere; not renormalised."""
    mode = space.check_mode(mode)
    single = coherent_amplitudes(alpha, space.cutoffs[mode])
    locals_ = {m: (single if m == mode else _unit(space.dims[m], 0)) for m in range(space.num_modes)}
    amps = _kron_modes([locals_[m] for m in range(space.num_modes)])
    tail = max(0.0, 1.0 - float(np.sum(np.abs(single) ** 2)))
    return StateVector(space, amps, tail)


def _unit(d: int, n: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[n] = 1.0
    return v


def _kron_modes(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Product vector with ``vectors[0]`` on mode 0 (least significant)."""
    out = np.ones(1, dtype=complex)
    for v in vectors:
        out = np.kron(v, out)
    return out


ModeKey = Union[int, tuple[int, ...]]


def _as_modes(key: ModeKey) -> tuple[int, ...]:
    return (key,) if isinstance(key, (int, np.integer)) else tuple(int(m) for m in key)


def product_state(space: FockSpace, parts: Mapping[ModeKey, StateVector | int]) -> StateVector:
    """Tensor product of per-group states; unspecified modes are vacuum.

    A key is a mode or a tuple of modes; a value is a StateVector over
    ``space.sub(modes)`` or an integer photon number (single-mode keys).
    """
    t = np.ones((), dtype=complex)
    axes: list[int] = []
    tail = 0.0
    covered: set[int] = set()
    for key, val in parts.items():
        modes = _as_modes(key)
        if covered & set(modes):
            raise DomainError(f"mode assigned twice in {list(parts)}")
        covered |= set(modes)
        vec = _group_vector(space, modes, val)
        if isinstance(val, StateVector):
            tail += val.tail_weight
        t = np.multiply.outer(t, space.sub(modes).to_tensor(vec))
        axes.extend(modes)
    for m in range(space.num_modes):
        if m not in covered:
            t = np.multiply.outer(t, _unit(space.dims[m], 0))
            axes.append(m)
    t = np.transpose(t, np.argsort(axes))
    return StateVector(space, np.reshape(t, -1, order="F"), tail)


def _group_vector(space: FockSpace, modes: tuple[int, ...], val) -> np.ndarray:
    sub = space.sub(modes)
    if isinstance(val, StateVector):
        if val.space != sub:
            raise DimensionError(f"state on {val.space.cutoffs} given for modes {modes} with cutoffs {sub.cutoffs}")
        return val.amplitudes
    counts = (int(val),) if len(modes) == 1 else tuple(int(v) for v in val)
    return fock_state(sub, counts).amplitudes


# -- measurement primitive ----------------------------------------------------

def contract(net: OperatorMatrix,
             prep: Mapping[ModeKey, StateVector | int],
             bra: Mapping[ModeKey, StateVector | int]) -> OperatorMatrix:
    """Feed ``prep`` kets into input modes and project output modes on ``bra``.

    Returns the operator from the unprepared input modes to the undetected
    output modes (both in ascending mode order).  Integer values denote Fock
    states; bra states enter complex conjugated.
    """
    if not net.is_square:
        raise DimensionError("contract needs a network on a single space")
    space = net.in_space
    m = space.num_modes
    prep_modes = _check_groups(space, prep)
    bra_modes = _check_groups(space, bra)
    t = np.reshape(net.entries, space.dims + space.dims, order="F")
    # sublist labels: output axis j -> j, input axis j -> m + j
    operands: list = [t, list(range(2 * m))]
    for key, val in prep.items():
        modes = _as_modes(key)
        operands += [space.sub(modes).to_tensor(_group_vector(space, modes, val)),
                     [m + j for j in modes]]
    for key, val in bra.items():
        modes = _as_modes(key)
        operands += [space.sub(modes).to_tensor(_group_vector(space, modes, val).conj()),
                     list(modes)]
    out_modes = [j for j in range(m) if j not in bra_modes]
    in_modes = [j for j in range(m) if j not in prep_modes]
    res = np.einsum(*operands, out_modes + [m + j for j in in_modes], optimize=True)
    out_space = _reduced(space, out_modes)
    in_space = _reduced(space, in_modes)
    return OperatorMatrix(in_space, out_space, np.reshape(res, (out_space.dim, in_space.dim), order="F"))


def _check_groups(space: FockSpace, groups: Mapping[ModeKey, object]) -> set[int]:
    seen: set[int] = set()
    for key in groups:
        for mode in _as_modes(key):
            space.check_mode(mode)
            if mode in seen:
                raise DomainError(f"mode {mode} assigned twice")
            seen.add(mode)
    return seen


def _reduced(space: FockSpace, modes: Sequence[int]) -> FockSpace:
    # a fully contracted side is represented by a one-dimensional space
    return space.sub(modes) if modes else FockSpace((0,))


def leakage(state: StateVector, mode: int, headroom: int = 2) -> float:
    """Probability mass in the top ``headroom`` levels of ``mode``."""
    space = state.space
    mode = space.check_mode(mode)
    top = space.occupations[:, mode] > space.cutoffs[mode] - headroom
    return float(np.sum(np.abs(state.amplitudes[top]) ** 2))


# -- subspace helpers -----------------------------------------------------------

def level_mask(space: FockSpace, max_levels: Mapping[int, int] | int) -> np.ndarray:
    """Basis states with ``n_j <= max_levels[j]`` (int: every mode)."""
    occ = space.occupations
    if isinstance(max_levels, (int, np.integer)):
        return np.all(occ <= max_levels, axis=1)
    mask = np.ones(space.dim, dtype=bool)
    for mode, lim in max_levels.items():
        mask &= occ[:, space.check_mode(mode)] <= lim
    return mask


def headroom_mask(space: FockSpace, headroom: int = 2) -> np.ndarray:
    """Basis states at least ``headroom`` levels below every cutoff."""
    return np.all(space.occupations <= np.array(space.cutoffs) - headroom, axis=1)


def total_mask(space: FockSpace, modes: Sequence[int], max_total: int) -> np.ndarray:
    occ = space.occupations
    return occ[:, list(modes)].sum(axis=1) <= max_total


def restricted(op: OperatorMatrix, in_mask: np.ndarray, out_mask: np.ndarray | None = None) -> np.ndarray:
    """Submatrix of ``op`` on the selected input columns (and output rows)."""
    cols = op.entries[:, in_mask]
    return cols if out_mask is None else cols[out_mask]


def permute_modes(state_or_op, order: Sequence[int]):
    """Relabel modes: new mode ``i`` is old mode ``order[i]``.

    Operators are permuted on both sides, which requires a square operator.
    """
    order = list(order)
    if isinstance(state_or_op, StateVector):
        sp = state_or_op.space
        if sorted(order) != list(range(sp.num_modes)):
            raise DomainError(f"{order} is not a permutation")
        new = sp.sub(order)
        t = np.transpose(state_or_op.tensor(), order)
        return StateVector(new, np.reshape(t, -1, order="F"), state_or_op.tail_weight)
    op = state_or_op
    return relabel_operator(op, order, order)


def relabel_operator(op: OperatorMatrix, out_order: Sequence[int], in_order: Sequence[int]) -> OperatorMatrix:
    """Permute output modes by ``out_order`` and input modes by ``in_order``."""
    out_order, in_order = list(out_order), list(in_order)
    so, si = op.out_space, op.in_space
    if sorted(out_order) != list(range(so.num_modes)) or sorted(in_order) != list(range(si.num_modes)):
        raise DomainError("relabelling must be a permutation of each side's modes")
    t = np.reshape(op.entries, so.dims + si.dims, order="F")
    k = so.num_modes
    t = np.transpose(t, out_order + [k + j for j in in_order])
    new_out, new_in = so.sub(out_order), si.sub(in_order)
    return OperatorMatrix(new_in, new_out, np.reshape(t, (new_out.dim, new_in.dim), order="F"))


def phase_aligned_distance(a: np.ndarray | OperatorMatrix, b: np.ndarray | OperatorMatrix) -> tuple[float, float]:
    """``min_chi max|a - e^{i chi} b|`` with chi from the Frobenius overlap.

    Returns ``(residual, chi)``; chi is the global phase that best maps
    ``b`` onto ``a``.
    """
    a = a.entries if isinstance(a, OperatorMatrix) else np.asarray(a)
    b = b.entries if isinstance(b, OperatorMatrix) else np.asarray(b)
    overlap = np.vdot(b, a)
    chi = float(np.angle(overlap)) if abs(overlap) > 0 else 0.0
    return float(np.max(np.abs(a - np.exp(1j * chi) * b), initial=0.0)), chi
