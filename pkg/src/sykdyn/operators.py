"""Dense operators between fixed-charge sectors.

An operator maps the charge-``Q_in`` sector (its domain) to the
charge-``Q_out`` sector (its codomain) of the same ``N`` modes. Rectangular
operators (``Q_in != Q_out``) are ordinary citizens here: they are needed for
odd-size strings such as ``c^dag_1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number
from typing import Sequence

import numpy as np

from .errors import HermiticityError, NormalizationError, SectorError
from .fock import SectorBasis, apply_monomial_many, build_sector

HERMITICITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SectorOperator:
    domain: SectorBasis
    codomain: SectorBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise SectorError(f"matrix shape {m.shape} does not match sectors "
                              f"({self.codomain.dim}, {self.domain.dim})")
        if self.domain.N != self.codomain.N:
            raise SectorError("domain and codomain must share the mode count")
        if m is self.matrix:
            m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def N(self) -> int:
        return self.domain.N

    @property
    def charge_shift(self) -> int:
        return self.codomain.Q - self.domain.Q

    @property
    def is_square(self) -> bool:
        return self.domain.Q == self.codomain.Q

    def same_sectors(self, other: "SectorOperator") -> bool:
        return self.domain.same_as(other.domain) and self.codomain.same_as(other.codomain)

    def like(self, matrix: np.ndarray) -> "SectorOperator":
        return SectorOperator(self.domain, self.codomain, matrix)

    def adjoint(self) -> "SectorOperator":
        return SectorOperator(self.codomain, self.domain, self.matrix.conj().T)

    @property
    def H(self) -> "SectorOperator":
        return self.adjoint()

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.matrix))

    def is_hermitian(self, tol: float = HERMITICITY_TOL) -> bool:
        return self.is_square and bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)

    def _check(self, other: "SectorOperator"):
        if not self.same_sectors(other):
            raise SectorError("operators act between different sectors")

    def __add__(self, other):
        if isinstance(other, Number):
            return self + other * identity(self.domain) if self.is_square else NotImplemented
        self._check(other)
        return self.like(self.matrix + other.matrix)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Number):
            return self + (-other)
        self._check(other)
        return self.like(self.matrix - other.matrix)

    def __rsub__(self, other):
        return (-1) * self + other

    def __neg__(self):
        return self.like(-self.matrix)

    def __mul__(self, scalar):
        if not isinstance(scalar, Number):
            return NotImplemented
        return self.like(scalar * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self.like(self.matrix / scalar)

    def __matmul__(self, other: "SectorOperator") -> "SectorOperator":
        """Composition ``self . other`` (``other`` acts first)."""
        if not other.codomain.same_as(self.domain):
            raise SectorError("cannot compose: codomain of the right factor is not the domain of the left")
        return SectorOperator(other.domain, self.codomain, self.matrix @ other.matrix)


def monomial_entries(creations: Sequence[int], annihilations: Sequence[int], domain: SectorBasis):
    """Nonzero pattern of a monomial on ``domain``: ``(src, dst, phase)`` index arrays."""
    q_out = domain.Q + len(creations) - len(annihilations)
    if not 0 <= q_out <= domain.N:
        raise SectorError(f"codomain charge {q_out} outside [0, {domain.N}]")
    alive, new, phase = apply_monomial_many(creations, annihilations, domain.states)
    src = np.nonzero(alive)[0]
    codomain = build_sector(domain.N, q_out, cap=max(domain.N, 1))
    dst = codomain.indices(new[src])
    return src, dst, phase[src], codomain


def monomial_operator(creations: Sequence[int], annihilations: Sequence[int], domain: SectorBasis) -> SectorOperator:
    """Matrix of ``c^dag_I c_J`` restricted to ``domain``; at most one nonzero per column."""
    if any(m > domain.N for m in (*creations, *annihilations)):
        raise SectorError(f"mode index exceeds N={domain.N}")
    src, dst, phase, codomain = monomial_entries(creations, annihilations, domain)
    m = np.zeros((codomain.dim, domain.dim), dtype=complex)
    m[dst, src] = phase
    return SectorOperator(domain, codomain, m)


def identity(basis: SectorBasis) -> SectorOperator:
    return SectorOperator(basis, basis, np.eye(basis.dim, dtype=complex))


def diagonal_operator(basis: SectorBasis, values) -> SectorOperator:
    return SectorOperator(basis, basis, np.diag(np.asarray(values, dtype=complex)))


def number_operator(i: int, basis: SectorBasis) -> SectorOperator:
    return diagonal_operator(basis, basis.occupations()[:, i - 1])


def staggered_weights(N: int) -> np.ndarray:
    """``(-1)**(i+1)`` for modes ``i = 1..N``."""
    return np.where(np.arange(1, N + 1) % 2 == 1, 1.0, -1.0)


def staggered_magnetization(basis: SectorBasis) -> SectorOperator:
    """``R = sum_i (-1)**(i+1) n_i``, with mode 1 weighted +1."""
    return diagonal_operator(basis, basis.occupations() @ staggered_weights(basis.N))


def trace_q(A: SectorOperator) -> complex:
    if not A.is_square:
        raise SectorError("trace of a charge-changing operator")
    return complex(np.trace(A.matrix))


def hs_inner_q(A: SectorOperator, B: SectorOperator) -> complex:
    """Charge-constrained Hilbert-Schmidt product ``Tr_Q(A^dag B)``.

    The trace runs over the common domain sector.
    """
    if not A.same_sectors(B):
        raise SectorError("hs_inner_q needs operators with the same domain and codomain")
    return complex(np.vdot(A.matrix, B.matrix))


def expectation(state: np.ndarray, W: SectorOperator, tol: float = HERMITICITY_TOL) -> float:
    """``<psi|W|psi>`` for a normalised state and a Hermitian operator."""
    psi = np.asarray(state)
    if psi.shape != (W.domain.dim,) or not W.is_square:
        raise SectorError("state and operator live on different sectors")
    if not W.is_hermitian(tol):
        raise HermiticityError("expectation value requested for a non-Hermitian operator")
    nrm = np.vdot(psi, psi).real
    if abs(nrm - 1.0) > tol:
        raise NormalizationError(f"state norm^2 = {nrm!r}, expected 1")
    val = np.vdot(psi, W.matrix @ psi)
    if abs(val.imag) > tol:
        raise HermiticityError(f"imaginary residue {val.imag:g} in expectation value")
    return float(val.real)
