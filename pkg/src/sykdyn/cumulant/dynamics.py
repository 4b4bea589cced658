"""Dynamical functions from cumulant eigenvalues, and averaged-observable reconstruction."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import MissingEigenvalueError, ResourceCapError, SectorError
from ..operators import SectorOperator, expectation
from ..opsize import SizeLabel, size_components
from .eigen import CumulantEigenvalue, best_eigenvalue, lambda_analytic
from .superop import ENUMERATION_LIMITS


@dataclass(frozen=True)
class DynamicalFunction:
    """``f(t) = exp(sum_k (Jt)^2k / (2k)! * lambda_2k)`` truncated at order ``truncation``."""

    size: SizeLabel
    N: int
    Q: int
    truncation: int
    eigenvalues: tuple
    J: float = 1.0

    def __post_init__(self):
        if self.truncation < 0 or self.truncation % 2:
            raise ValueError("truncation order must be even and non-negative")
        orders = [e.order for e in self.eigenvalues]
        if orders != list(range(2, self.truncation + 1, 2)):
            raise ValueError(f"need eigenvalues of orders 2..{self.truncation}, got {orders}")

    def __call__(self, t):
        return evaluate_f(self, t)


def evaluate_f(df: DynamicalFunction, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    x = df.J * t
    expo = sum(x ** e.order / math.factorial(e.order) * e.value for e in df.eigenvalues)
    out = np.exp(expo) if df.eigenvalues else np.ones_like(x)
    # exactly 1 at the origin
    out = np.where(t == 0, 1.0, out)
    return float(out) if out.ndim == 0 else out


EigenSource = Callable[[int, SizeLabel, int, int], CumulantEigenvalue]


def default_source(*, mc_samples: int = 0, master_seed: int = 0, q: int = 4,
                   limits=ENUMERATION_LIMITS, threads: int = 1) -> EigenSource:
    cache = {}

    def src(order, size, N, Q):
        key = (order, size, N, Q)
        if key not in cache:
            cache[key] = best_eigenvalue(order, size, N, Q, q=q, mc_samples=mc_samples,
                                         master_seed=master_seed, limits=limits, threads=threads)
        return cache[key]
    return src


def dynamical_function(size, N: int, Q: int, truncation: int, source: EigenSource | None = None,
                       J: float = 1.0) -> DynamicalFunction:
    size = size if isinstance(size, SizeLabel) else SizeLabel(*size)
    source = source or default_source()
    if size == SizeLabel(0, 0):
        # the identity is annihilated by every cumulant
        eigs = tuple(CumulantEigenvalue(o, size, N, Q, 0.0, "analytic")
                     for o in range(2, truncation + 1, 2))
    else:
        eigs = []
        for o in range(2, truncation + 1, 2):
            try:
                eigs.append(source(o, size, N, Q))
            except (ResourceCapError, ValueError) as exc:
                raise MissingEigenvalueError(f"order {o}, size {size}: {exc}") from exc
        eigs = tuple(eigs)
    return DynamicalFunction(size, N, Q, truncation, eigs, J)


@dataclass
class Reconstruction:
    """``sum_m c_mm f_mm(t)`` for one observable and initial state."""

    truncation: int
    components: dict            # SizeLabel -> (c_mm, DynamicalFunction)
    meta: dict = field(default_factory=dict)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for c, df in self.components.values():
            total = total + c * df(t)
        return float(total) if total.ndim == 0 else total

    def to_csv(self, path, times) -> None:
        vals = self(np.asarray(times, dtype=float))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "prediction", "truncation"])
            for t, v in zip(times, vals):
                w.writerow([f"{t:.17g}", f"{v:.17g}", self.truncation])


def reconstruct_observable(W: SectorOperator, psi0: np.ndarray, truncation: int, *,
                           source: EigenSource | None = None, max_size: int = 2,
                           J: float = 1.0, tol: float = 1e-9) -> Reconstruction:
    """Cumulant prediction of the disorder-averaged ``<psi0|W(t)|psi0>``."""
    if not W.is_square:
        raise SectorError("reconstruction needs a charge-conserving observable")
    parts = size_components(W, max_size)
    resid = parts.pop("residual")
    if resid > tol * max(1.0, W.hs_norm()):
        raise ValueError(f"W has components beyond size ({max_size},{max_size}); "
                         f"residual norm {resid:.3g}")
    N, Q = W.N, W.domain.Q
    comps = {}
    for size, P in sorted(parts.items()):
        if P.hs_norm() <= tol:
            continue
        c = expectation(psi0, P)
        comps[size] = (c, dynamical_function(size, N, Q, truncation, source, J))
    return Reconstruction(truncation, comps, {"N": N, "Q": Q})


# -- order-of-magnitude table ---------------------------------------------------------

@dataclass(frozen=True)
class MagnitudeRow:
    N: int
    order: int
    magnitude: float
    method: str
    stderr: float

    def row(self):
        return [self.N, self.order, f"{self.magnitude:.17g}", self.method, f"{self.stderr:.17g}"]


MAGNITUDE_CSV_HEADER = ["N", "order", "magnitude", "method", "stderr"]


def magnitude_table(N_range: Sequence[int], orders: Sequence[int] = (2, 4, 6), *,
                    mc_samples: int = 0, mc_max_n: int = 10, master_seed: int = 0,
                    limits=ENUMERATION_LIMITS, threads: int = 1, notes: list | None = None):
    """``|lambda_2k^{(1,1)}(N, N/2)| / (2k)!`` for even ``N``, sorted by ``(N, order)``.

    Orders without a closed form use enumeration where feasible and Monte Carlo
    up to ``mc_max_n`` otherwise; rows that cannot be computed are skipped and
    described in ``notes``.
    """
    rows = []
    for N in sorted(set(N_range)):
        if N % 2:
            raise ValueError(f"magnitude table needs even N, got {N}")
        for order in sorted(orders):
            try:
                ev = best_eigenvalue(order, (1, 1), N, N // 2, mc_samples=mc_samples if N <= mc_max_n else 0,
                                     master_seed=master_seed, limits=limits, threads=threads)
            except ResourceCapError as exc:
                if notes is not None:
                    notes.append(f"N={N} order={order}: {exc}")
                continue
            f = math.factorial(order)
            rows.append(MagnitudeRow(N, order, abs(ev.value) / f, ev.method, ev.stderr / f))
    return rows


def separation_report(rows: Sequence[MagnitudeRow]) -> dict:
    """Per ``N``: whether magnitudes strictly decrease with order (None if fewer than two orders)."""
    by_n = {}
    for r in rows:
        by_n.setdefault(r.N, []).append(r)
    return {N: (all(a.magnitude > b.magnitude for a, b in zip(rs, rs[1:])) if len(rs) > 1 else None)
            for N, rs in by_n.items()}
