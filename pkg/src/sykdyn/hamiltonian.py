"""SYK_q disorder realisations and their sector Hamiltonians.

A realisation is a Hermitian table of complex couplings ``J[I; J']`` indexed
by strictly increasing ``q/2``-tuples. The Hamiltonian is

    H = K_q * sum_{I, J'} J[I; J'] c^dag_I c_J'

with ``K_q = sqrt((q/2)! (q/2 - 1)! / N**(q-1))`` and the sum running over all
ordered tuple pairs, including ``I == J'``.
"""

from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SectorError
from .fock import SectorBasis, apply_monomial_many, build_sector
from .operators import SectorOperator

_MASK64 = (1 << 64) - 1


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def sample_seed(master_seed: int, index: int) -> int:
    """Per-sample 64-bit seed; depends only on ``(master_seed, index)``."""
    return splitmix64(splitmix64(int(master_seed) & _MASK64) ^ (int(index) & _MASK64))


def kq_prefactor(q: int, N: int) -> float:
    if q < 2 or q % 2:
        raise ValueError(f"q must be even and >= 2, got {q}")
    h = q // 2
    return math.sqrt(math.factorial(h) * math.factorial(h - 1) / N ** (q - 1))


@functools.lru_cache(maxsize=None)
def index_tuples(N: int, q: int) -> tuple[tuple[int, ...], ...]:
    """Strictly increasing ``q/2``-tuples of modes, lexicographically ordered."""
    return tuple(itertools.combinations(range(1, N + 1), q // 2))


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """One disorder realisation.

    Only the canonical half is stored: ``diag[a]`` for ``I = J' = tuples[a]``
    and ``upper[k]`` for the pair ``(tuples[a], tuples[b])`` with ``a < b``
    (row-major upper-triangle order). The swapped entry is the conjugate.
    """

    N: int
    q: int
    J: float
    diag: np.ndarray
    upper: np.ndarray
    seed: int | None = None

    @property
    def tuples(self):
        return index_tuples(self.N, self.q)

    def matrix(self) -> np.ndarray:
        """Full Hermitian coupling matrix ``M[a, b] = J[tuples[a]; tuples[b]]``."""
        n = len(self.diag)
        m = np.zeros((n, n), dtype=complex)
        iu = np.triu_indices(n, 1)
        m[iu] = self.upper
        m = m + m.conj().T
        m[np.diag_indices(n)] = self.diag
        return m

    def entry(self, I: Sequence[int], Jidx: Sequence[int]) -> complex:
        pos = {t: k for k, t in enumerate(self.tuples)}
        a, b = pos[tuple(I)], pos[tuple(Jidx)]
        if a == b:
            return complex(self.diag[a])
        n = len(self.diag)
        lo, hi = min(a, b), max(a, b)
        k = lo * n - lo * (lo + 1) // 2 + (hi - lo - 1)
        v = complex(self.upper[k])
        return v if a < b else v.conjugate()

    def scaled(self, s: float) -> "CouplingTable":
        return CouplingTable(self.N, self.q, self.J * s, self.diag * s, self.upper * s, self.seed)

    def to_csv(self, path) -> None:
        """Dump the canonical half as ``I;Jidx;re;im`` with dash-joined tuples."""
        tuples = self.tuples
        n = len(tuples)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=";", lineterminator="\n")
            w.writerow(["I", "Jidx", "re", "im"])
            k = 0
            for a in range(n):
                w.writerow(["-".join(map(str, tuples[a])), "-".join(map(str, tuples[a])),
                            repr(float(self.diag[a])), repr(0.0)])
            for a, b in zip(*np.triu_indices(n, 1)):
                v = self.upper[k]
                k += 1
                w.writerow(["-".join(map(str, tuples[a])), "-".join(map(str, tuples[b])),
                            repr(float(v.real)), repr(float(v.imag))])


def sample_couplings(N: int, q: int, J: float = 1.0, seed: int = 0) -> CouplingTable:
    """Draw one realisation.

    Off-diagonal entries: real and imaginary parts i.i.d. ``N(0, J^2/2)``.
    Diagonal entries: real ``N(0, J^2)``. Deterministic in ``seed``.
    """
    if q < 2 or q % 2:
        raise ValueError(f"q must be even and >= 2, got {q}")
    if q // 2 > N:
        raise ValueError(f"q/2={q // 2} exceeds N={N}")
    n = math.comb(N, q // 2)
    rng = np.random.default_rng(int(seed) & _MASK64)
    diag = J * rng.standard_normal(n)
    n_off = n * (n - 1) // 2
    parts = rng.standard_normal((2, n_off)) * (J / math.sqrt(2.0))
    return CouplingTable(N, q, float(J), diag, parts[0] + 1j * parts[1], seed)


class SectorTerms:
    """Sparse patterns of every ``h_alpha = c^dag_I c_J'`` on one sector.

    ``alpha = a * n_t + b`` labels ``(I, J') = (tuples[a], tuples[b])``; its
    conjugate is ``b * n_t + a``. Entries of ``h_alpha`` live in
    ``src/dst/sign[ptr[alpha]:ptr[alpha + 1]]`` (``h[dst, src] = sign``).
    Instances are immutable and shared.
    """

    def __init__(self, basis: SectorBasis, q: int):
        self.basis = basis
        self.q = q
        self.tuples = index_tuples(basis.N, q)
        n_t = len(self.tuples)
        self.n_t = n_t
        self.n_alpha = n_t * n_t
        src_l, dst_l, sign_l, counts = [], [], [], np.zeros(self.n_alpha, dtype=np.int64)
        states = basis.states
        for a, I in enumerate(self.tuples):
            for b, Jt in enumerate(self.tuples):
                alive, new, phase = apply_monomial_many(I, Jt, states)
                src = np.nonzero(alive)[0]
                counts[a * n_t + b] = len(src)
                if len(src):
                    src_l.append(src)
                    dst_l.append(basis.indices(new[src]))
                    sign_l.append(phase[src].astype(float))
        self.ptr = np.concatenate([[0], np.cumsum(counts)])
        cat = (lambda xs, dt: np.concatenate(xs).astype(dt) if xs else np.zeros(0, dtype=dt))
        self.src = cat(src_l, np.int64)
        self.dst = cat(dst_l, np.int64)
        self.sign = cat(sign_l, float)
        self.entry_alpha = np.repeat(np.arange(self.n_alpha), counts)
        self.counts = counts
        a, b = np.divmod(np.arange(self.n_alpha), n_t)
        self.conj = b * n_t + a
        for arr in (self.ptr, self.src, self.dst, self.sign, self.entry_alpha, self.conj, self.counts):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def entries(self, alpha: int):
        s = slice(self.ptr[alpha], self.ptr[alpha + 1])
        return self.src[s], self.dst[s], self.sign[s]

    def dense(self, alpha: int) -> np.ndarray:
        m = np.zeros((self.dim, self.dim))
        src, dst, sign = self.entries(alpha)
        m[dst, src] = sign
        return m

    def left(self, alpha: int, X: np.ndarray) -> np.ndarray:
        """``h_alpha @ X`` for X with leading axis on this sector."""
        src, dst, sign = self.entries(alpha)
        out = np.zeros_like(X)
        out[dst] = sign.reshape((-1,) + (1,) * (X.ndim - 1)) * X[src]
        return out

    def right(self, alpha: int, X: np.ndarray) -> np.ndarray:
        """``X @ h_alpha`` for X with trailing axis on this sector."""
        src, dst, sign = self.entries(alpha)
        out = np.zeros_like(X)
        out[..., src] = X[..., dst] * sign
        return out

    def hamiltonian_matrix(self, coupling_matrix: np.ndarray, prefactor: float) -> np.ndarray:
        w = coupling_matrix.ravel()[self.entry_alpha] * self.sign * prefactor
        flat = self.dst * self.dim + self.src
        size = self.dim * self.dim
        h = np.bincount(flat, weights=w.real, minlength=size) + 1j * np.bincount(flat, weights=w.imag, minlength=size)
        return h.reshape(self.dim, self.dim)


@functools.lru_cache(maxsize=64)
def sector_terms(N: int, q: int, Q: int) -> SectorTerms:
    return SectorTerms(build_sector(N, Q, cap=max(N, 1)), q)


def build_hamiltonian(table: CouplingTable, basis: SectorBasis) -> SectorOperator:
    if basis.N != table.N:
        raise SectorError(f"coupling table has N={table.N}, sector has N={basis.N}")
    terms = sector_terms(basis.N, table.q, basis.Q)
    h = terms.hamiltonian_matrix(table.matrix(), kq_prefactor(table.q, table.N))
    return SectorOperator(basis, basis, h)
