"""Translation orbits of product basis states and momentum-sector dimensions.

Basis states of ``L`` qudits with local dimension ``d`` are encoded as integers
in base ``d`` with site 0 as the most significant digit, so integer order and
lexicographic order of the digit strings coincide.  The cyclic translation

    T |m_0 m_1 ... m_{L-1}> = |m_{L-1} m_0 ... m_{L-2}>

moves every digit one place to the right.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ResourceError

MAX_EXACT_STATES = 2**64
DEFAULT_STATE_BUDGET = 2**24


@dataclass(frozen=True)
class BasisState:
    digits: Tuple[int, ...]
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(m) for m in self.digits))
        if self.d < 2:
            raise ValueError("local dimension d must be at least 2")
        if not self.digits:
            raise ValueError("a basis state needs at least one site")
        if any(m < 0 or m >= self.d for m in self.digits):
            raise ValueError(f"digits {self.digits} out of range for d={self.d}")

    @property
    def L(self) -> int:
        return len(self.digits)

    @classmethod
    def from_string(cls, s: str, d: int = 2) -> "BasisState":
        return cls(tuple(int(c) for c in s), d)

    @classmethod
    def from_index(cls, index: int, L: int, d: int = 2) -> "BasisState":
        digits = []
        for _ in range(L):
            index, m = divmod(index, d)
            digits.append(m)
        return cls(tuple(reversed(digits)), d)

    @property
    def index(self) -> int:
        n = 0
        for m in self.digits:
            n = n * self.d + m
        return n

    def translate(self, times: int = 1) -> "BasisState":
        s = times % self.L
        if s == 0:
            return self
        return BasisState(self.digits[-s:] + self.digits[:-s], self.d)

    def reflect(self) -> "BasisState":
        return BasisState(self.digits[::-1], self.d)

    def __str__(self) -> str:
        return "".join(str(m) for m in self.digits)


@dataclass(frozen=True)
class OrbitClass:
    representative: BasisState
    primitive_period: int

    def members(self) -> List[BasisState]:
        return [self.representative.translate(j) for j in range(self.primitive_period)]


@dataclass(frozen=True)
class SectorDimensionTable:
    L: int
    d: int
    dims: Dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.dims.values())

    def is_special(self, k: int) -> bool:
        return is_special_sector(self.L, k)


def is_special_sector(L: int, k: int) -> bool:
    """Sectors k = 0 and k = L/2 carry the extra reflection symmetry."""
    return k % L == 0 or 2 * (k % L) == L


def relevant_sectors(L: int) -> List[int]:
    """Non-special momenta with exactly one of each (k, L-k) pair."""
    return list(range(1, (L + 1) // 2))


def divisors(n: int) -> List[int]:
    if n < 1:
        raise ValueError("divisors are defined for positive integers")
    small, large = [], []
    i = 1
    while i * i <= n:
        if n % i == 0:
            small.append(i)
            if i * i != n:
                large.append(n // i)
        i += 1
    return small + large[::-1]


def mobius(n: int) -> int:
    """Möbius function mu(n) for n >= 1."""
    if n < 1:
        raise ValueError(f"mobius(n) requires n >= 1, got {n}")
    sign = 1
    p = 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1
    if n > 1:
        sign = -sign
    return sign


def primitive_period(state: BasisState) -> int:
    L = state.L
    for J in divisors(L):
        if state.translate(J) == state:
            return J
    raise AssertionError("unreachable: T^L is the identity")


def survives_projection(J: int, k: int, L: int) -> bool:
    """True iff the momentum-k projection of a period-J basis state is nonzero."""
    if J < 1 or L % J != 0:
        raise ValueError(f"primitive period {J} does not divide L={L}")
    if not 0 <= k < L:
        raise ValueError(f"momentum k={k} outside [0, {L})")
    return (k * J) % L == 0


@lru_cache(maxsize=None)
def count_primitive_classes(J: int, d: int = 2) -> int:
    """Number of translation orbits whose primitive period is exactly ``J``."""
    if J < 1:
        raise ValueError("J must be a positive integer")
    total = sum(mobius(J // m) * d**m for m in divisors(J))
    count, rem = divmod(total, J)
    assert rem == 0, "Möbius sum not divisible by J"
    return count


def _check_exact(L: int, d: int) -> None:
    if L < 1 or d < 2:
        raise ValueError(f"need L >= 1 and d >= 2, got L={L}, d={d}")
    if d**L > MAX_EXACT_STATES:
        raise ResourceError(f"d^L = {d}^{L} exceeds 2^64")


def sector_dimension(L: int, d: int, k: int) -> int:
    _check_exact(L, d)
    if not 0 <= k < L:
        raise ValueError(f"momentum k={k} outside [0, {L})")
    return sum(count_primitive_classes(J, d) for J in divisors(L) if (k * J) % L == 0)


def dimension_table(L: int, d: int = 2) -> SectorDimensionTable:
    return SectorDimensionTable(L, d, {k: sector_dimension(L, d, k) for k in range(L)})


def translate_indices(indices: np.ndarray, L: int, d: int = 2, times: int = 1) -> np.ndarray:
    """Apply T^times to an array of encoded basis states."""
    s = times % L
    if s == 0:
        return np.asarray(indices).copy()
    low = d**s
    return indices // low + (indices % low) * d ** (L - s)


def reflect_indices(indices: np.ndarray, L: int, d: int = 2) -> np.ndarray:
    indices = np.asarray(indices)
    out = np.zeros_like(indices)
    rest = indices.copy()
    for _ in range(L):
        out = out * d + rest % d
        rest //= d
    return out


def orbit_arrays(L: int, d: int = 2, budget: int = DEFAULT_STATE_BUDGET) -> Tuple[np.ndarray, np.ndarray]:
    """Representative and primitive period for every encoded basis state.

    Returns two int64 arrays of length ``d**L``: the lexicographically minimal
    member of each state's orbit, and its primitive period.
    """
    if L < 1 or d < 2:
        raise ValueError(f"need L >= 1 and d >= 2, got L={L}, d={d}")
    n_states = d**L
    if n_states > budget:
        raise ResourceError(f"{n_states} basis states exceed the budget of {budget}")
    states = np.arange(n_states, dtype=np.int64)
    rep = states.copy()
    period = np.zeros(n_states, dtype=np.int64)
    cur = states
    for j in range(1, L + 1):
        cur = translate_indices(cur, L, d)
        np.minimum(rep, cur, out=rep)
        newly = (period == 0) & (cur == states)
        period[newly] = j
    return rep, period


def enumerate_orbit_representatives(L: int, d: int = 2, budget: int = DEFAULT_STATE_BUDGET) -> List[OrbitClass]:
    rep, period = orbit_arrays(L, d, budget)
    reps = np.flatnonzero(rep == np.arange(rep.size))
    return [OrbitClass(BasisState.from_index(int(r), L, d), int(period[r])) for r in reps]


def projector_rank(L: int, d: int, k: int, tol: float = 1e-8) -> int:
    """Rank of the dense momentum projector (1/L) sum_j w^{-jk} T^j.

    Brute-force reference for :func:`sector_dimension`; cost is O(d^{3L}).
    """
    n = d**L
    idx = np.arange(n)
    P = np.zeros((n, n), dtype=complex)
    cur = idx
    for j in range(L):
        P[cur, idx] += np.exp(-2j * np.pi * j * k / L) / L
        cur = translate_indices(cur, L, d)
    sv = np.linalg.svd(P, compute_uv=False)
    return int(np.sum(sv > tol))


def block_projector_rank(L: int, d: int, k: int, tol: float = 1e-8) -> int:
    """Projector rank computed orbit block by orbit block.

    T only permutes states inside an orbit, so the projector is block diagonal
    over orbits.  Each block is assembled from the actual member indices and
    its rank taken from singular values; blocks of equal period share a rank.
    """
    rep, period = orbit_arrays(L, d, budget=d**L)
    reps = np.flatnonzero(rep == np.arange(rep.size))
    rank = 0
    for J in np.unique(period[reps]):
        group = reps[period[reps] == J]
        r = int(group[0])
        members = [r]
        for _ in range(int(J) - 1):
            members.append(int(translate_indices(np.int64(members[-1]), L, d)))
        pos = {m: i for i, m in enumerate(members)}
        block = np.zeros((J, J), dtype=complex)
        for i, m in enumerate(members):
            cur = np.int64(m)
            for j in range(L):
                block[pos[int(cur)], i] += np.exp(-2j * np.pi * j * k / L) / L
                cur = translate_indices(cur, L, d)
        sv = np.linalg.svd(block, compute_uv=False)
        rank += int(np.sum(sv > tol)) * group.size
    return rank


def brute_force_class_counts(L: int, d: int) -> Dict[int, int]:
    """Orbit counts keyed by primitive period, by walking every state."""
    seen = set()
    counts: Dict[int, int] = {}
    for n in range(d**L):
        if n in seen:
            continue
        s = BasisState.from_index(n, L, d)
        orbit = {s.translate(j).index for j in range(L)}
        seen |= orbit
        counts[len(orbit)] = counts.get(len(orbit), 0) + 1
    return counts


def digits_of(indices: Sequence[int], L: int, d: int = 2) -> np.ndarray:
    """Digit matrix of shape (len(indices), L), site 0 first."""
    indices = np.asarray(indices, dtype=np.int64)
    out = np.empty((indices.size, L), dtype=np.int64)
    rest = indices.copy()
    for site in range(L - 1, -1, -1):
        out[:, site] = rest % d
        rest //= d
    return out
