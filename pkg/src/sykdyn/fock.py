"""Fixed-charge Fock bases and fermionic monomials with Jordan-Wigner signs.

Modes are labelled 1..N. A Fock state is an integer bitmask in which bit
``i - 1`` is set when mode ``i`` is occupied. Acting with ``c_i`` or ``c_i^dag``
on a state picks up ``(-1)**(number of occupied modes with index < i)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ResourceCapError, SectorError

DEFAULT_ED_CAP = 16


def _popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """All Fock states of ``N`` modes holding exactly ``Q`` fermions, sorted."""

    N: int
    Q: int
    states: np.ndarray
    lookup: dict = field(repr=False)

    def __post_init__(self):
        self.states.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def __len__(self):
        return len(self.states)

    def index(self, state: int) -> int:
        return self.lookup[int(state)]

    def indices(self, states: np.ndarray) -> np.ndarray:
        """Vectorised lookup; every entry must belong to the sector."""
        idx = np.searchsorted(self.states, states)
        return idx

    def occupations(self) -> np.ndarray:
        """0/1 occupation table of shape ``(dim, N)``; column ``i`` is mode ``i + 1``."""
        bits = np.arange(self.N, dtype=np.int64)
        return ((self.states[:, None] >> bits[None, :]) & 1).astype(np.int8)

    def same_as(self, other: "SectorBasis") -> bool:
        return self is other or (self.N == other.N and self.Q == other.Q)


_SECTOR_CACHE: dict = {}


def build_sector(N: int, Q: int, cap: int = DEFAULT_ED_CAP) -> SectorBasis:
    """Enumerate the charge-``Q`` sector of ``N`` modes.

    Results are cached per ``(N, Q)``; instances are immutable.
    """
    if N < 1:
        raise SectorError(f"mode count must be positive, got N={N}")
    if not 0 <= Q <= N:
        raise SectorError(f"charge Q={Q} outside [0, {N}]")
    if N > cap:
        raise ResourceCapError(f"N={N} exceeds the exact-diagonalisation cap of {cap} modes")
    key = (N, Q)
    basis = _SECTOR_CACHE.get(key)
    if basis is None:
        states = np.array(
            sorted(sum(1 << (m - 1) for m in occ) for occ in itertools.combinations(range(1, N + 1), Q)),
            dtype=np.int64,
        )
        assert len(states) == math.comb(N, Q)
        lookup = {int(s): i for i, s in enumerate(states)}
        basis = SectorBasis(N, Q, states, lookup)
        _SECTOR_CACHE[key] = basis
    return basis


def neel_bitmask(N: int) -> int:
    """Occupation of the odd modes 1, 3, 5, ..."""
    return sum(1 << (m - 1) for m in range(1, N + 1, 2))


def _check_modes(modes: Sequence[int], name: str):
    modes = tuple(int(m) for m in modes)
    if len(set(modes)) != len(modes):
        raise ValueError(f"repeated mode index in {name}: {modes}")
    if any(b <= a for a, b in zip(modes, modes[1:])):
        raise ValueError(f"{name} must be strictly increasing, got {modes}")
    if any(m < 1 for m in modes):
        raise ValueError(f"modes are 1-indexed, got {modes}")
    return modes


def apply_monomial(creations: Sequence[int], annihilations: Sequence[int], s: int) -> Optional[tuple[int, int]]:
    """Apply ``c^dag_{I_1}...c^dag_{I_m} c_{J_1}...c_{J_n}`` to the Fock state ``s``.

    Factors act right to left, so ``c_{J_n}`` is applied first. Returns
    ``(new_state, phase)`` or ``None`` when the state is annihilated.
    """
    I = _check_modes(creations, "creations")
    J = _check_modes(annihilations, "annihilations")
    s = int(s)
    phase = 1
    for j in reversed(J):
        bit = 1 << (j - 1)
        if not s & bit:
            return None
        if bin(s & (bit - 1)).count("1") & 1:
            phase = -phase
        s ^= bit
    for i in reversed(I):
        bit = 1 << (i - 1)
        if s & bit:
            return None
        if bin(s & (bit - 1)).count("1") & 1:
            phase = -phase
        s ^= bit
    return s, phase


def apply_monomial_many(creations: Sequence[int], annihilations: Sequence[int], states: np.ndarray):
    """Vectorised :func:`apply_monomial` over an array of states.

    Returns ``(alive, new_states, phases)``; entries where ``alive`` is False
    are meaningless.
    """
    I = _check_modes(creations, "creations")
    J = _check_modes(annihilations, "annihilations")
    s = np.array(states, dtype=np.int64, copy=True)
    alive = np.ones(s.shape, dtype=bool)
    phase = np.ones(s.shape, dtype=np.int64)
    for j in reversed(J):
        bit = np.int64(1 << (j - 1))
        alive &= (s & bit) != 0
        phase *= 1 - 2 * (_popcount(s & (bit - 1)) & 1)
        s ^= bit
    for i in reversed(I):
        bit = np.int64(1 << (i - 1))
        alive &= (s & bit) == 0
        phase *= 1 - 2 * (_popcount(s & (bit - 1)) & 1)
        s ^= bit
    return alive, s, phase
