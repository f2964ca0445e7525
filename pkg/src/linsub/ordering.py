"""s-ordered functions of the photon number operator.

Everything here is a function of ``n``, so operators are diagonal on a
single mode with cutoff ``D``.  ``{f}_s`` denotes the s-ordered operator whose
c-number counterpart is ``f(|alpha|^2)``: ``s = 1`` is normal order,
``s = 0`` symmetric and ``s = -1`` anti-normal order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularParameterError
from .fock import FockSpace, OperatorMatrix


@dataclass(frozen=True)
class OrderedMonomial:
    """``{a^dag^m a^n}_s``."""

    m: int
    n: int
    s: float

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise DomainError("powers must be non-negative")
        if not -1.0 <= self.s <= 1.0:
            raise DomainError("s must lie in [-1, 1]")


def _check_s(s: float) -> None:
    if not -1.0 <= s <= 1.0:
        raise DomainError(f"s = {s} outside [-1, 1]")


def _pow(x: float, k: int) -> float:
    return 1.0 if k == 0 else x ** k


def binomial_of_n(cutoff: int, l: int) -> np.ndarray:
    """``C(n, l)`` for ``n = 0..cutoff`` via the falling factorial."""
    n = np.arange(cutoff + 1, dtype=float)
    out = np.ones_like(n)
    for j in range(l):
        out *= (n - j)
    return out / math.factorial(l)


def _diag(values: np.ndarray) -> OperatorMatrix:
    space = FockSpace((values.size - 1,))
    return OperatorMatrix.on(space, np.diag(values.astype(complex)))


def s_to_t_expansion(m: int, n: int, s: float, t: float) -> list[tuple[float, int, int]]:
    """``{a^dag^m a^n}_s`` as ``sum coeff * {a^dag^(m-k) a^(n-k)}_t``."""
    OrderedMonomial(m, n, s)
    _check_s(t)
    return [(math.factorial(k) * math.comb(m, k) * math.comb(n, k) * _pow((t - s) / 2.0, k), m - k, n - k)
            for k in range(min(m, n) + 1)]


def normal_ordered_diagonal(m: int, cutoff: int) -> np.ndarray:
    """Diagonal of ``a^dag^m a^m``, i.e. ``n! / (n - m)!``."""
    return math.factorial(m) * binomial_of_n(cutoff, m)


def s_ordered_monomial_diagonal(l: int, s: float, cutoff: int) -> np.ndarray:
    """``{n^l}_s`` by re-expanding into normal order."""
    out = np.zeros(cutoff + 1)
    for c, mm, _ in s_to_t_expansion(l, l, s, 1.0):
        out += c * normal_ordered_diagonal(mm, cutoff)
    return out


def s_ordered_power_coefficients(k: int, s: float) -> np.ndarray:
    """Coefficients of ``C(n, l)``, ``l = 0..k``, in ``{n^k}_s``."""
    _check_s(s)
    if k < 0:
        raise DomainError("k must be non-negative")
    h = (1.0 - s) / 2.0
    return np.array([math.factorial(k) * _pow(h, k - l) * math.comb(k, l) for l in range(k + 1)])


def s_ordered_power_of_n(k: int, s: float, cutoff: int = 12) -> tuple[OperatorMatrix, np.ndarray]:
    """``{n^k}_s`` as a diagonal operator, plus its coefficients over ``C(n, l)``."""
    coeffs = s_ordered_power_coefficients(k, s)
    diag = sum(c * binomial_of_n(cutoff, l) for l, c in enumerate(coeffs))
    return _diag(np.asarray(diag, dtype=float)), coeffs


def power_of_n_from_s_ordered(k: int, s: float) -> np.ndarray:
    """``c_l`` with ``n^k = sum_l c_l {n^l}_s``."""
    _check_s(s)
    if k < 0:
        raise DomainError("k must be non-negative")
    h = (s - 1.0) / 2.0
    c = np.zeros(k + 1)
    for l in range(k + 1):
        total = 0.0
        for j in range(l, k + 1):
            for m in range(j + 1):
                total += (math.comb(j, m) * math.comb(j, l) * (-1) ** (m + j)
                          * _pow(m, k) * _pow(h, j - l))
        c[l] = total / math.factorial(l)
    return c


def s_ordered_series(coeffs, s: float, cutoff: int) -> np.ndarray:
    """Diagonal of ``sum_l c_l {n^l}_s``."""
    out = np.zeros(cutoff + 1, dtype=complex)
    for l, c in enumerate(coeffs):
        if c != 0:
            out += c * s_ordered_power_of_n(l, s, cutoff)[0].diagonal()
    return out


def s_ordered_exponential(alpha: complex, s: float, cutoff: int = 12) -> OperatorMatrix:
    """``{exp(alpha n)}_s = (1 + (s+1) alpha/2)**n / (1 + (s-1) alpha/2)**(n+1)``."""
    _check_s(s)
    den = 1.0 + (s - 1.0) * alpha / 2.0
    if abs(den) < 1e-300:
        raise SingularParameterError("pole of the s-ordered exponential")
    num = 1.0 + (s + 1.0) * alpha / 2.0
    n = np.arange(cutoff + 1)
    return _diag(np.array([(num ** int(k) if k else 1.0) / den ** (int(k) + 1) for k in n], dtype=complex))


def power_as_s_ordered_exponential(a: complex, s: float) -> tuple[complex, complex]:
    """``(x, c)`` with ``a**n = c {exp(x n)}_s``."""
    _check_s(s)
    if a == 1:
        return 0.0, 1.0
    inner = 1.0 / (a - 1.0) + (1.0 - s) / 2.0
    pre = 1.0 + (1.0 - s) * (a - 1.0) / 2.0
    if inner == 0 or pre == 0:
        raise SingularParameterError(f"a = {a} has no s = {s} exponential form")
    return 1.0 / inner, 1.0 / pre


def exponential_series_diagonal(alpha: complex, s: float, cutoff: int, terms: int = 60) -> np.ndarray:
    """Truncated ``sum_k alpha^k / k! {n^k}_s`` built from the normal-order expansion."""
    out = np.zeros(cutoff + 1, dtype=complex)
    for k in range(terms):
        out += alpha ** k / math.factorial(k) * s_ordered_monomial_diagonal(k, s, cutoff)
    return out


def bridge_sum(z: complex, N: int, cutoff: int) -> np.ndarray:
    """``sum_{k<=N} C(n, k) (z - 1)**k`` on ``n = 0..cutoff``."""
    out = np.zeros(cutoff + 1, dtype=complex)
    for k in range(N + 1):
        out += (z - 1.0) ** k * binomial_of_n(cutoff, k)
    return out


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


S_GRID = (-1.0, -0.5, 0.0, 0.5, 1.0)


def round_trip_residuals(kmax: int = 5, s_values=S_GRID, cutoff: int = 12,
                         a_values=(0.3, 2.0, -0.5 + 0.4j), N_bridge: int = 6) -> dict[str, float]:
    """Worst relative residual of each identity family."""
    n = np.arange(cutoff + 1, dtype=float)
    res = {"power_round_trip": 0.0, "power_via_normal_order": 0.0,
           "exponential_round_trip": 0.0, "exponential_series": 0.0, "bridge": 0.0}
    for s in s_values:
        for k in range(kmax + 1):
            back = s_ordered_series(power_of_n_from_s_ordered(k, s), s, cutoff)
            res["power_round_trip"] = max(res["power_round_trip"], _rel(back, n ** k))
            direct = s_ordered_power_of_n(k, s, cutoff)[0].diagonal()
            res["power_via_normal_order"] = max(res["power_via_normal_order"],
                                                _rel(direct, s_ordered_monomial_diagonal(k, s, cutoff)))
        for a in a_values:
            try:
                x, c = power_as_s_ordered_exponential(a, s)
            except SingularParameterError:
                continue
            back = c * s_ordered_exponential(x, s, cutoff).diagonal()
            res["exponential_round_trip"] = max(res["exponential_round_trip"], _rel(back, complex(a) ** n))
        small = 0.2 - 0.1j
        res["exponential_series"] = max(res["exponential_series"],
                                        _rel(exponential_series_diagonal(small, s, cutoff),
                                             s_ordered_exponential(small, s, cutoff).diagonal()))
    for N in range(N_bridge + 1):
        for z in (2.0, 1j, 0.5, -1.3 + 0.2j):
            res["bridge"] = max(res["bridge"], _rel(bridge_sum(z, N, N), z ** np.arange(N + 1)))
    return res
