"""Exact-diagonalisation quench dynamics and disorder averages."""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import HermiticityError, SectorError
from .fock import SectorBasis, build_sector, neel_bitmask
from .hamiltonian import build_hamiltonian, sample_couplings, sample_seed
from .operators import (HERMITICITY_TOL, SectorOperator, expectation, identity,
                        number_operator, staggered_magnetization)
from .stats import streamed_moments

DEFAULT_TMAX = 3.0
DEFAULT_DT = 0.05


def time_grid(t_max: float = DEFAULT_TMAX, dt: float = DEFAULT_DT) -> np.ndarray:
    n = int(round(t_max / dt))
    return np.arange(n + 1) * dt


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    basis: SectorBasis
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruction_error(self, H: SectorOperator) -> float:
        U, E = self.eigenvectors, self.eigenvalues
        return float(np.max(np.abs(H.matrix - (U * E) @ U.conj().T), initial=0.0))

    def to_eigenbasis(self, W: SectorOperator) -> np.ndarray:
        U = self.eigenvectors
        return U.conj().T @ W.matrix @ U


def diagonalize(H: SectorOperator) -> SpectralDecomposition:
    if not H.is_hermitian(HERMITICITY_TOL):
        raise HermiticityError("diagonalize needs a Hermitian operator")
    E, U = np.linalg.eigh(H.matrix)
    return SpectralDecomposition(H.domain, E, U)


def neel_state(basis: SectorBasis) -> np.ndarray:
    """Unit vector on the Fock state occupying modes 1, 3, 5, ..."""
    mask = neel_bitmask(basis.N)
    if mask not in basis.lookup:
        raise SectorError(f"Neel state needs Q={(basis.N + 1) // 2}, sector has Q={basis.Q}")
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index(mask)] = 1.0
    return psi


def fock_state(basis: SectorBasis, bitmask: int) -> np.ndarray:
    if bitmask not in basis.lookup:
        raise SectorError(f"Fock state {bitmask:#b} is not in the Q={basis.Q} sector")
    psi = np.zeros(basis.dim, dtype=complex)
    psi[basis.index(bitmask)] = 1.0
    return psi


def initial_state(tag: str, basis: SectorBasis) -> np.ndarray:
    """``'neel'`` or ``'fock:<bitmask>'`` (bitmask in any int literal base)."""
    if tag == "neel":
        return neel_state(basis)
    if tag.startswith("fock:"):
        return fock_state(basis, int(tag[5:], 0))
    raise ValueError(f"unknown initial state {tag!r}")


def observable_operator(tag: str, basis: SectorBasis) -> SectorOperator:
    """``'R'``, ``'R2'``, ``'identity'`` or ``'n<i>'`` (number operator of mode i)."""
    if tag == "R":
        return staggered_magnetization(basis)
    if tag == "R2":
        R = staggered_magnetization(basis)
        return R @ R
    if tag == "identity":
        return identity(basis)
    if tag.startswith("n") and tag[1:].isdigit():
        return number_operator(int(tag[1:]), basis)
    raise ValueError(f"unknown observable {tag!r}")


def _phases(E: np.ndarray, times: np.ndarray) -> np.ndarray:
    return np.exp(-1j * np.outer(times, E))


def heisenberg_expectation(spec: SpectralDecomposition, psi0: np.ndarray, W: SectorOperator,
                           times: Sequence[float]) -> np.ndarray:
    """``<psi(t)|W|psi(t)>`` with ``psi(t) = exp(-iHt) psi0``.

    The ``t == 0`` entries are ``expectation(psi0, W)`` verbatim.
    """
    if not W.domain.same_as(spec.basis) or not W.is_square or len(psi0) != spec.basis.dim:
        raise SectorError("operands live on different sectors")
    times = np.asarray(times, dtype=float)
    a = spec.eigenvectors.conj().T @ psi0
    Wt = spec.to_eigenbasis(W)
    B = a[None, :] * _phases(spec.eigenvalues, times)
    vals = np.einsum("tk,kl,tl->t", B.conj(), Wt, B).real
    zero = times == 0
    if zero.any():
        vals[zero] = expectation(psi0, W)
    return vals


def heisenberg_operator(spec: SpectralDecomposition, W: SectorOperator, t: float) -> SectorOperator:
    """``exp(iHt) W exp(-iHt)``."""
    if not W.domain.same_as(spec.basis) or not W.is_square:
        raise SectorError("operator does not live on the decomposed sector")
    if t == 0:
        return W
    U, E = spec.eigenvectors, spec.eigenvalues
    ph = np.exp(1j * E * t)
    Wt = spec.to_eigenbasis(W) * np.outer(ph, ph.conj())
    return W.like(U @ Wt @ U.conj().T)


def overlap_series(spec: SpectralDecomposition, A: SectorOperator, W: SectorOperator,
                   times: Sequence[float]) -> np.ndarray:
    """``Tr_Q(A^dag W(t))`` on a time grid without forming ``W(t)``."""
    times = np.asarray(times, dtype=float)
    P = (spec.to_eigenbasis(A).conj() * spec.to_eigenbasis(W))
    E = spec.eigenvalues
    ph = np.exp(1j * np.outer(times, E))
    # sum_kl P_kl e^{i(E_k - E_l)t}
    vals = np.einsum("tk,kl,tl->t", ph, P, ph.conj())
    zero = times == 0
    if zero.any():
        vals[zero] = np.vdot(A.matrix, W.matrix)
    return vals


@dataclass
class QuenchParams:
    N: int
    Q: int | None = None
    q: int = 4
    J: float = 1.0
    samples: int = 2000
    master_seed: int = 0
    times: np.ndarray = field(default_factory=time_grid)
    observable: str = "R"
    initial_state: str = "neel"
    threads: int = 1

    def __post_init__(self):
        if self.Q is None:
            self.Q = self.N // 2
        self.times = np.asarray(self.times, dtype=float)
        if self.samples < 2:
            raise ValueError("disorder averages need at least 2 samples")
        if len(self.times) == 0 or self.times[0] != 0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must start at 0 and increase strictly")

    def manifest(self) -> dict:
        return {"N": self.N, "Q": self.Q, "q": self.q, "J": self.J, "samples": self.samples,
                "master_seed": self.master_seed, "observable": self.observable,
                "initial_state": self.initial_state}


@dataclass
class DynamicsTrace:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    samples: int
    meta: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "mean", "stderr", "samples"])
            for t, m, s in zip(self.times, self.mean, self.stderr):
                w.writerow([f"{t:.17g}", f"{m:.17g}", f"{s:.17g}", self.samples])


def realization(params: QuenchParams, index: int):
    """Coupling table, Hamiltonian and spectrum of sample ``index``."""
    basis = build_sector(params.N, params.Q)
    table = sample_couplings(params.N, params.q, params.J, sample_seed(params.master_seed, index))
    H = build_hamiltonian(table, basis)
    return table, H, diagonalize(H)


def _stderr_progress(total):
    done = [0]

    def report(n):
        done[0] += n
        print(f"\r{done[0]}/{total} samples", end="", file=sys.stderr, flush=done[0] >= total)
        if done[0] >= total:
            print(file=sys.stderr)
    return report


def disorder_average_dynamics(params: QuenchParams, *, progress: bool = False,
                              keep_samples: bool = False) -> DynamicsTrace:
    """Average ``<W(t)>`` over ``params.samples`` independent realisations."""
    basis = build_sector(params.N, params.Q)
    W = observable_operator(params.observable, basis)
    psi0 = initial_state(params.initial_state, basis)
    kept = {}

    def one(i):
        _, _, spec = realization(params, i)
        vals = heisenberg_expectation(spec, psi0, W, params.times)
        if keep_samples:
            kept[i] = vals
        return vals

    rm = streamed_moments(one, params.samples, threads=params.threads,
                          progress=_stderr_progress(params.samples) if progress else None)
    meta = params.manifest()
    trace = DynamicsTrace(params.times.copy(), rm.mean, rm.stderr, rm.count, meta)
    if keep_samples:
        trace.meta["per_sample"] = np.array([kept[i] for i in range(params.samples)])
    return trace
