"""Operator-size basis on a charge sector and size-resolved dynamics.

An operator of size ``(m, n)`` is built from ``m`` creation and ``n``
annihilation factors and orthogonalised, under the charge-constrained
Hilbert-Schmidt product, against every operator of smaller size.
"""

from __future__ import annotations

import csv
import itertools
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import SectorError
from .fock import SectorBasis, build_sector
from .evolution import (QuenchParams, heisenberg_expectation, initial_state, observable_operator,
                        overlap_series, realization)
from .operators import SectorOperator, hs_inner_q, identity, monomial_operator, number_operator
from .stats import streamed_moments

log = logging.getLogger(__name__)

DROP_TOL = 1e-8


@dataclass(frozen=True, order=True)
class SizeLabel:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ValueError(f"size labels are non-negative, got ({self.m}, {self.n})")

    def __str__(self):
        return f"{self.m},{self.n}"


@dataclass(frozen=True, eq=False)
class SizeBasisElement:
    op: SectorOperator
    size: SizeLabel
    descriptor: str

    @property
    def slug(self) -> str:
        """File-name friendly tag, e.g. ``diag_2-2``."""
        tag = re.sub(r"[^A-Za-z0-9]+", "-", self.descriptor).strip("-")
        return f"{tag}_{self.size.m}-{self.size.n}"


def orthonormalize_size_basis(seeds, basis: SectorBasis | None = None, *,
                              drop_tol: float = DROP_TOL, dropped: list | None = None):
    """Modified Gram-Schmidt over ``seeds`` in the given order.

    ``seeds`` holds ``(operator, SizeLabel)`` or ``(operator, SizeLabel, descriptor)``
    tuples with non-decreasing size. If no size-(0,0) seed is given and the
    operators are charge conserving, the normalised identity is prepended so
    that every element is orthogonal to constants. Seeds whose residual norm
    falls below ``drop_tol`` are skipped; their descriptors are appended to
    ``dropped`` when a list is passed.
    """
    seeds = [tuple(s) for s in seeds]
    if not seeds:
        return []
    sizes = [s[1] for s in seeds]
    if any((b.m + b.n) < (a.m + a.n) for a, b in zip(sizes, sizes[1:])):
        raise ValueError("seeds must be ordered by non-decreasing size")
    first = seeds[0][0]
    if basis is not None and not first.domain.same_as(basis):
        raise SectorError("seed operators do not live on the requested sector")
    if first.is_square and not any(s[1] == SizeLabel(0, 0) for s in seeds):
        seeds.insert(0, (identity(first.domain), SizeLabel(0, 0), "identity"))

    out: list[SizeBasisElement] = []
    mats = []
    for k, s in enumerate(seeds):
        op, size = s[0], s[1]
        desc = s[2] if len(s) > 2 else f"seed{k}"
        if mats and not op.same_sectors(out[0].op):
            raise SectorError("all seeds must share domain and codomain")
        v = np.array(op.matrix, dtype=complex)
        scale = np.linalg.norm(v)
        for e in mats:
            v -= np.vdot(e, v) * e
        nrm = np.linalg.norm(v)
        if scale == 0 or nrm < drop_tol * max(1.0, scale):
            log.debug("dropping seed %s of size %s (residual norm %.3g)", desc, size, nrm)
            if dropped is not None:
                dropped.append(desc)
            continue
        v /= nrm
        mats.append(v)
        out.append(SizeBasisElement(op.like(v), size, desc))
    return out


def _normalized(op: SectorOperator) -> SectorOperator:
    nrm = op.hs_norm()
    if nrm == 0:
        raise SectorError("operator vanishes on this sector")
    return op / nrm


def standard_test_operators(basis: SectorBasis) -> list[SizeBasisElement]:
    """Diagonal and off-diagonal unit-norm probes of sizes (1,1) and (2,2), on modes 1..4.

    At half filling the closed forms are used. Elsewhere the diagonal probes
    come out of the generic Gram-Schmidt construction.
    """
    N, Q = basis.N, basis.Q
    if N < 4:
        raise SectorError("the standard probes need N >= 4")
    one = identity(basis)
    n1, n2 = number_operator(1, basis), number_operator(2, basis)
    off11 = monomial_operator([1], [2], basis)
    off22 = monomial_operator([1, 2], [3, 4], basis)
    off = [SizeBasisElement(_normalized(off11 + off11.H), SizeLabel(1, 1), "off-diag 1,2"),
           SizeBasisElement(_normalized(off22 + off22.H), SizeLabel(2, 2), "off-diag 1,2,3,4")]
    if 2 * Q == N:
        d11 = n1 - 0.5 * one
        d22 = n1 @ n2 - 0.5 * (n1 + n2) + N / (4 * (N - 1)) * one
        diag = [SizeBasisElement(_normalized(d11), SizeLabel(1, 1), "diag 1"),
                SizeBasisElement(_normalized(d22), SizeLabel(2, 2), "diag 1,2")]
    else:
        log.warning("Q=%d is not half filling; building diagonal probes by Gram-Schmidt", Q)
        els = diagonal_size_basis(basis, max_size=2)
        pick = {e.descriptor: e for e in els}
        diag = [SizeBasisElement(pick["n1"].op, SizeLabel(1, 1), "diag 1"),
                SizeBasisElement(pick["n1 n2"].op, SizeLabel(2, 2), "diag 1,2")]
    return [diag[0], off[0], diag[1], off[1]]


def diagonal_seeds(basis: SectorBasis, max_size: int = 2):
    """Products of distinct number operators, ordered by size."""
    occ = basis.occupations().astype(float)
    seeds = [(identity(basis), SizeLabel(0, 0), "identity")]
    for m in range(1, max_size + 1):
        for modes in itertools.combinations(range(1, basis.N + 1), m):
            vals = np.prod(occ[:, [i - 1 for i in modes]], axis=1)
            op = SectorOperator(basis, basis, np.diag(vals.astype(complex)))
            seeds.append((op, SizeLabel(m, m), " ".join(f"n{i}" for i in modes)))
    return seeds


def monomial_seeds(basis: SectorBasis, max_size: int = 2):
    """Charge-conserving strings ``c^dag_I c_J`` with ``|I| = |J| <= max_size``, ordered by size.

    Diagonal strings (``I == J``) are the number-operator products.
    """
    seeds = [(identity(basis), SizeLabel(0, 0), "identity")]
    modes = range(1, basis.N + 1)
    for m in range(1, max_size + 1):
        for I in itertools.combinations(modes, m):
            for J in itertools.combinations(modes, m):
                op = monomial_operator(list(I), list(J), basis)
                desc = f"cdag{'.'.join(map(str, I))} c{'.'.join(map(str, J))}"
                seeds.append((op, SizeLabel(m, m), desc))
    return seeds


def diagonal_size_basis(basis: SectorBasis, max_size: int = 2) -> list[SizeBasisElement]:
    return orthonormalize_size_basis(diagonal_seeds(basis, max_size), basis)


def full_size_basis(basis: SectorBasis, max_size: int = 2) -> list[SizeBasisElement]:
    return orthonormalize_size_basis(monomial_seeds(basis, max_size), basis)


def size_coefficient(T: SizeBasisElement, Wt: SectorOperator) -> complex:
    """``Tr_Q(T^dag W(t))``."""
    return hs_inner_q(T.op, Wt)


def size_components(W: SectorOperator, max_size: int = 2, *, elements=None) -> dict:
    """Split a charge-conserving ``W`` into its size-(m,m) parts.

    Returns ``{SizeLabel: SectorOperator}`` plus the HS norm of the remainder
    under key ``'residual'``. Diagonal ``W`` uses the diagonal basis only, which
    is exact because diagonal and off-diagonal strings are orthogonal.
    """
    if not W.is_square:
        raise SectorError("size decomposition needs a charge-conserving operator")
    if elements is None:
        m = W.matrix
        is_diag = not np.any(m - np.diag(np.diagonal(m)))
        elements = (diagonal_size_basis if is_diag else full_size_basis)(W.domain, max_size)
    parts: dict = {}
    for e in elements:
        c = size_coefficient(e, W)
        parts[e.size] = parts.get(e.size, 0 * W) + c * e.op
    rest = W - sum(parts.values(), 0 * W)
    parts["residual"] = rest.hs_norm()
    return parts


# -- size-resolved dynamics --------------------------------------------------


@dataclass
class GrowthProfile:
    times: np.ndarray
    elements: list
    mean: np.ndarray            # (k, t) complex
    re_stderr: np.ndarray       # (k, t)
    im_stderr: np.ndarray
    samples: int
    singles: np.ndarray         # (n_single, k, t) complex, first realisations
    max_abs: np.ndarray         # (k,) largest |coefficient| over all realisations and times
    delta: np.ndarray           # |<c(t)/c(0)> - <W(t)/W(0)>|
    delta_stderr: np.ndarray    # sqrt(se_1^2 + se_2^2)
    meta: dict = field(default_factory=dict)

    def write_csvs(self, out_dir) -> list[Path]:
        out_dir = Path(out_dir)
        paths = []
        for k, e in enumerate(self.elements):
            p = out_dir / f"coeff_{e.slug}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "re_mean", "im_mean", "re_stderr", "im_stderr", "samples"])
                for j, t in enumerate(self.times):
                    m = self.mean[k, j]
                    w.writerow([f"{t:.17g}", f"{m.real:.17g}", f"{m.imag:.17g}",
                                f"{self.re_stderr[k, j]:.17g}", f"{self.im_stderr[k, j]:.17g}",
                                self.samples])
            paths.append(p)
        p = out_dir / "delta.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "delta", "stderr", "samples"])
            for t, d, s in zip(self.times, self.delta, self.delta_stderr):
                w.writerow([f"{t:.17g}", f"{d:.17g}", f"{s:.17g}", self.samples])
        paths.append(p)
        p = out_dir / "singles.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample", "element", "t", "re", "im"])
            for i, per in enumerate(self.singles):
                for k, e in enumerate(self.elements):
                    for t, c in zip(self.times, per[k]):
                        w.writerow([i, e.slug, f"{t:.17g}", f"{c.real:.17g}", f"{c.imag:.17g}"])
        paths.append(p)
        return paths


def growth_profile(params: QuenchParams, elements: Sequence[SizeBasisElement] | None = None,
                   *, n_single: int = 3, progress=None) -> GrowthProfile:
    """Size coefficients ``Tr_Q(T^dag W(t))`` per realisation and on average.

    The first element is the reference for the ``Delta(t)`` comparison against
    ``<psi0|W(t)|psi0>``.
    """
    basis = build_sector(params.N, params.Q)
    W = observable_operator(params.observable, basis)
    psi0 = initial_state(params.initial_state, basis)
    if elements is None:
        elements = standard_test_operators(basis)
    elements = list(elements)
    k, nt = len(elements), len(params.times)
    c0 = np.array([size_coefficient(e, W) for e in elements])
    w0 = heisenberg_expectation(realization(params, 0)[2], psi0, W, [0.0])[0]
    if c0[0] == 0 or w0 == 0:
        raise SectorError("reference coefficient or initial expectation vanishes; Delta undefined")
    singles = np.zeros((min(n_single, params.samples), k, nt), dtype=complex)
    max_abs = np.zeros((params.samples, k))

    def one(i):
        _, _, spec = realization(params, i)
        coeffs = np.array([overlap_series(spec, e.op, W, params.times) for e in elements])
        wt = heisenberg_expectation(spec, psi0, W, params.times)
        if i < len(singles):
            singles[i] = coeffs
        max_abs[i] = np.abs(coeffs).max(axis=1)
        return np.concatenate([coeffs.real.ravel(), coeffs.imag.ravel(),
                               (coeffs[0] / c0[0]).real, wt / w0])

    rm = streamed_moments(one, params.samples, threads=params.threads, progress=progress)
    mean, se = rm.mean, rm.stderr
    kt = k * nt
    re_m, im_m = mean[:kt].reshape(k, nt), mean[kt:2 * kt].reshape(k, nt)
    re_s, im_s = se[:kt].reshape(k, nt), se[kt:2 * kt].reshape(k, nt)
    r_m, r_s = mean[2 * kt:2 * kt + nt], se[2 * kt:2 * kt + nt]
    w_m, w_s = mean[2 * kt + nt:], se[2 * kt + nt:]
    return GrowthProfile(
        times=params.times.copy(), elements=elements, mean=re_m + 1j * im_m,
        re_stderr=re_s, im_stderr=im_s, samples=rm.count, singles=singles,
        max_abs=max_abs.max(axis=0), delta=np.abs(r_m - w_m), delta_stderr=np.hypot(r_s, w_s),
        meta=params.manifest())
