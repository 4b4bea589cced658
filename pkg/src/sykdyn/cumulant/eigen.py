"""Cumulant eigenvalues on fixed-size operators: closed forms, enumeration, Monte Carlo.

Conventions: eigenvalues are quoted for ``J = 1`` and labelled by the charge
of the representative's *domain* sector.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DegenerateSectorError, ResourceCapError
from ..fock import build_sector
from ..hamiltonian import build_hamiltonian, sample_couplings, sample_seed
from ..operators import SectorOperator, hs_inner_q, identity, monomial_operator
from ..opsize import SizeLabel, diagonal_size_basis
from .superop import ENUMERATION_LIMITS, extract_cumulant

METHODS = ("analytic", "exact-enumeration", "monte-carlo")
MC_BATCHES = 20


@dataclass(frozen=True)
class CumulantEigenvalue:
    order: int
    size: SizeLabel
    N: int
    Q: int
    value: float
    method: str
    stderr: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError("eigenvalue must be finite")
        if self.stderr < 0 or self.method not in METHODS:
            raise ValueError(f"bad stderr/method: {self.stderr}, {self.method}")

    def row(self) -> list:
        return [self.order, self.size.m, self.size.n, self.N, self.Q,
                f"{self.value:.17g}", f"{self.stderr:.17g}", self.method]


EIGEN_CSV_HEADER = ["order", "m", "n", "N", "Q", "value", "stderr", "method"]


# -- closed forms (q = 4) --------------------------------------------------------

def _l2_10(N, Q):
    return -Q * (N - 1) * (N - Q + 1) / Fraction(N) ** 3


def _l2_11(N, Q):
    return -2 * (Q - 1) * (N - Q + 1) / Fraction(N) ** 2


def _l2_21(N, Q):
    return -(N - 1) * (N * (3 * Q - 2) - 3 * Q * (Q - 1)) / Fraction(N) ** 3


def _l2_22(N, Q):
    return -2 * (N - 1) * (N * (2 * Q - 3) - 2 * Q * (Q - 2)) / Fraction(N) ** 3


def _l4_11(N, Q):
    return (2 * (Q - 1) * (N ** 2 * (Q - 3) - 2 * N * (Q ** 2 - Q - 3) + Q * (Q ** 2 + Q - 7) + 1)
            / Fraction(N) ** 4)


CLOSED_FORMS = {(2, (1, 0)): _l2_10, (2, (1, 1)): _l2_11, (2, (2, 1)): _l2_21,
                (2, (2, 2)): _l2_22, (4, (1, 1)): _l4_11}


def analytic_available(order: int, size, q: int = 4) -> bool:
    m, n = size if isinstance(size, tuple) else (size.m, size.n)
    return q == 4 and ((order, (m, n)) in CLOSED_FORMS or (order, (n, m)) in CLOSED_FORMS)


def lambda_analytic_exact(order: int, size, N: int, Q: int) -> Fraction:
    m, n = size if isinstance(size, tuple) else (size.m, size.n)
    f = CLOSED_FORMS.get((order, (m, n)))
    if f is not None:
        return f(N, Q)
    f = CLOSED_FORMS.get((order, (n, m)))
    if f is not None:
        # lambda_{m,n}(N, Q) = lambda_{n,m}(N, Q + m - n)
        return f(N, Q + m - n)
    raise KeyError(f"no closed form for order {order}, size ({m},{n})")


def lambda_analytic(order: int, size, N: int, Q: int) -> CumulantEigenvalue:
    size = size if isinstance(size, SizeLabel) else SizeLabel(*size)
    try:
        val = lambda_analytic_exact(order, size, N, Q)
    except KeyError as exc:
        raise ValueError(str(exc)) from None
    return CumulantEigenvalue(order, size, N, Q, float(val), "analytic", 0.0)


# -- representatives ---------------------------------------------------------------

def representative(size, N: int, Q: int, kind: str = "off") -> SectorOperator:
    """Unit-norm operator of pure size ``size`` acting on the charge-``Q`` sector.

    ``kind='off'`` gives the normalised string ``c^dag_1..c^dag_m c_{m+1}..c_{m+n}``;
    ``kind='diag'`` (``m == n`` only) the Gram-Schmidt-orthogonalised product
    ``n_1 ... n_m``. Raises ``DegenerateSectorError`` if it vanishes.
    """
    m, n = size if isinstance(size, tuple) else (size.m, size.n)
    basis = build_sector(N, Q, cap=max(N, 1))
    if m == n == 0:
        return identity(basis) / math.sqrt(basis.dim)
    if kind == "diag":
        if m != n:
            raise ValueError("diagonal representatives need m == n")
        want = " ".join(f"n{i}" for i in range(1, m + 1))
        if m > N:
            raise DegenerateSectorError(f"size ({m},{n}) needs at least {m} modes")
        for e in diagonal_size_basis(basis, max_size=m):
            if e.descriptor == want:
                return e.op
        raise DegenerateSectorError(f"size ({m},{n}) diagonal representative vanishes at N={N}, Q={Q}")
    if kind != "off":
        raise ValueError(f"unknown representative kind {kind!r}")
    if m + n > N or not 0 <= Q + m - n <= N:
        raise DegenerateSectorError(f"size ({m},{n}) has no representative at N={N}, Q={Q}")
    T = monomial_operator(list(range(1, m + 1)), list(range(m + 1, m + n + 1)), basis)
    nrm = T.hs_norm()
    if nrm == 0:
        raise DegenerateSectorError(f"size ({m},{n}) representative vanishes at N={N}, Q={Q}")
    return T / nrm


def rayleigh(T: SectorOperator, CT: SectorOperator) -> float:
    return float((hs_inner_q(T, CT) / hs_inner_q(T, T)).real)


def eigen_residual(k: int, T: SectorOperator, q: int = 4, limits=ENUMERATION_LIMITS) -> float:
    """``||C_2k T - lambda T|| / ||T||`` under exact enumeration."""
    CT = extract_cumulant(k, T, q, limits=limits)
    lam = hs_inner_q(T, CT) / hs_inner_q(T, T)
    return (CT - lam * T).hs_norm() / T.hs_norm()


# -- Monte Carlo ------------------------------------------------------------------

def _spectral_weights(T: SectorOperator, q: int, seed: int, J: float = 1.0):
    """``|<k|T|l>|^2`` and ``E_k - E_l`` in the eigenbases of one realisation."""
    table = sample_couplings(T.N, q, J, seed)
    H_in = build_hamiltonian(table, T.domain)
    E_in, U_in = np.linalg.eigh(H_in.matrix)
    if T.is_square:
        E_out, U_out = E_in, U_in
    else:
        E_out, U_out = np.linalg.eigh(build_hamiltonian(table, T.codomain).matrix)
    Tt = U_out.conj().T @ T.matrix @ U_in
    return np.abs(Tt) ** 2, E_out[:, None] - E_in[None, :]


def _per_sample(fn, n_samples: int, threads: int) -> np.ndarray:
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return np.array(list(ex.map(fn, range(n_samples))))
    return np.array([fn(i) for i in range(n_samples)])


def mc_moments(T: SectorOperator, orders, samples: int, master_seed: int = 0, q: int = 4,
               threads: int = 1) -> np.ndarray:
    """Per-sample ``<<T|L^2n T>> / <<T|T>> = (-1)^n ||L^n T||^2 / ||T||^2``; shape (samples, len(orders))."""
    orders = list(orders)
    norm2 = T.hs_norm() ** 2

    def one(i):
        w, dE = _spectral_weights(T, q, sample_seed(master_seed, i))
        return [(-1) ** (o // 2) * float(np.sum(w * dE ** o)) / norm2 for o in orders]

    return _per_sample(one, samples, threads)


def cumulants_from_moments(m2, m4=None, m6=None):
    """Scalar moment-to-cumulant recursion for commuting cumulants."""
    out = [m2]
    if m4 is not None:
        out.append(m4 - 3 * m2 ** 2)
    if m6 is not None:
        out.append(m6 - 15 * m2 * m4 + 30 * m2 ** 3)
    return out


def _batch_stderr(values: np.ndarray, func, batches: int) -> float:
    """Standard error of ``func(column means)`` from contiguous batch means."""
    b = min(batches, len(values))
    if b < 2:
        return float("nan")
    ests = np.array([func(chunk.mean(axis=0)) for chunk in np.array_split(values, b)])
    return float(ests.std(ddof=1) / math.sqrt(b))


def lambda_numeric(order: int, size, N: int, Q: int, method: str = "auto", *, q: int = 4,
                   kind: str = "off", samples: int = 2000, master_seed: int = 0,
                   exact_lower: bool = False, batches: int = MC_BATCHES, threads: int = 1,
                   limits=ENUMERATION_LIMITS) -> CumulantEigenvalue:
    """Numeric cumulant eigenvalue from a representative.

    ``method``: ``'exact-enumeration'``, ``'monte-carlo'`` or ``'auto'``
    (enumeration within ``limits``, Monte Carlo beyond). With
    ``exact_lower`` the Monte Carlo path plugs exact lower moments into the
    recursion, so only the top moment carries sampling noise.
    """
    if order not in (2, 4, 6):
        raise ValueError(f"order must be 2, 4 or 6, got {order}")
    size = size if isinstance(size, SizeLabel) else SizeLabel(*size)
    T = representative(size, N, Q, kind)
    k = order // 2
    if method == "auto":
        method = "exact-enumeration" if N <= limits[order] else "monte-carlo"
    if method == "exact-enumeration":
        if N > limits[order]:
            raise ResourceCapError(f"order-{order} enumeration capped at N={limits[order]}")
        val = rayleigh(T, extract_cumulant(k, T, q, limits=limits))
        return CumulantEigenvalue(order, size, N, Q, val, method, 0.0)
    if method != "monte-carlo":
        raise ValueError(f"unknown method {method!r}")
    if samples < 2:
        raise ValueError("Monte Carlo needs at least 2 samples")
    exact = {}
    if exact_lower:
        for o in range(2, order, 2):
            if N > limits[o]:
                raise ResourceCapError(f"exact order-{o} moment unavailable at N={N}")
            from .superop import moment_apply
            exact[o] = rayleigh(T, moment_apply(o, T, q, limits=limits))
    orders = [o for o in (2, 4, 6)[:k] if o not in exact]
    per = mc_moments(T, orders, samples, master_seed, q, threads)

    def cum(means):
        m = dict(exact)
        m.update(zip(orders, means))
        return cumulants_from_moments(*[m[o] for o in (2, 4, 6)[:k]])[-1]

    val = float(cum(per.mean(axis=0)))
    se = _batch_stderr(per, cum, batches)
    return CumulantEigenvalue(order, size, N, Q, val, "monte-carlo", se)


def best_eigenvalue(order: int, size, N: int, Q: int, *, q: int = 4, mc_samples: int = 0,
                    master_seed: int = 0, limits=ENUMERATION_LIMITS, threads: int = 1,
                    exact_lower: bool = True) -> CumulantEigenvalue:
    """Closed form if known, else enumeration if feasible, else Monte Carlo (if ``mc_samples``)."""
    size = size if isinstance(size, SizeLabel) else SizeLabel(*size)
    if analytic_available(order, size, q):
        return lambda_analytic(order, size, N, Q)
    if N <= limits[order]:
        return lambda_numeric(order, size, N, Q, "exact-enumeration", q=q, limits=limits)
    if mc_samples:
        lower_ok = all(N <= limits[o] for o in range(2, order, 2))
        return lambda_numeric(order, size, N, Q, "monte-carlo", q=q, samples=mc_samples,
                              master_seed=master_seed, exact_lower=exact_lower and lower_ok,
                              threads=threads, limits=limits)
    raise ResourceCapError(f"order-{order} eigenvalue at N={N} needs Monte Carlo samples")


# -- averaged propagator overlaps ----------------------------------------------------

def propagator_overlap(T: SectorOperator, times, samples: int, master_seed: int = 0,
                       q: int = 4, J: float = 1.0, threads: int = 1):
    """Disorder average of ``<<T|T(t)>> / <<T|T>>`` with ``T(t) = e^{iHt} T e^{-iHt}``.

    Returns ``(mean, stderr)`` of the real part; the imaginary part averages
    to zero and is dropped. The ``t = 0`` point is exactly 1 with stderr 0.
    """
    times = np.asarray(times, dtype=float)
    norm2 = T.hs_norm() ** 2

    def one(i):
        w, dE = _spectral_weights(T, q, sample_seed(master_seed, i), J)
        flat_w, flat_e = w.ravel(), dE.ravel()
        keep = flat_w > 0
        vals = np.cos(np.outer(times, flat_e[keep])) @ flat_w[keep] / norm2
        vals[times == 0] = 1.0
        return vals

    from ..stats import streamed_moments
    rm = streamed_moments(one, samples, threads=threads)
    return rm.mean, rm.stderr
