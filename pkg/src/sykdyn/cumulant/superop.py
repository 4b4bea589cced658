"""Disorder-averaged powers of the Liouvillian, by exact Wick enumeration.

With ``l_a X = -i [h_a, X]`` and couplings obeying ``E[J_a J_b] = delta(b, conj a)``,
the moment superoperator of order ``2n`` is

    M_2n = K_q**(2n) * sum over pair partitions of the 2n positions
           sum_{a per pair} l_{a_1} ... l_{a_2n}

where the earlier position of each pair carries ``a`` and the later one
``conj(a)``. Everything acts on operator matrices; no dense superoperator is
ever formed.

Two evaluation routes:

* closed forms for orders 2 and 4. Summing one contracted pair collapses to
  left/right multiplications by ``A = sum_a h_a h_a^dag`` (diagonal) and the
  sandwich map ``Phi(X) = sum_a h_a X h_a^dag``, which is applied through a
  precomputed sparse index plan.
* a generic pairing enumerator (any pattern, any order): every pair label but
  one is looped explicitly, the remaining label is batched over all multi-
  indices at once. Used for order 6 and as an independent check of the
  closed forms.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import ResourceCapError, SectorError
from ..fock import build_sector
from ..hamiltonian import SectorTerms, index_tuples, kq_prefactor, sector_terms
from ..operators import SectorOperator

# largest N for which exact enumeration of each order is attempted
ENUMERATION_LIMITS = {2: 16, 4: 10, 6: 5}
STACK_BUDGET_BYTES = 256 * 2**20


@dataclass(frozen=True)
class MultiIndex:
    I: tuple[int, ...]
    J: tuple[int, ...]

    def __post_init__(self):
        for t in (self.I, self.J):
            if any(b <= a for a, b in zip(t, t[1:])):
                raise ValueError(f"multi-index tuples must be strictly increasing: {t}")

    def conjugate(self) -> "MultiIndex":
        return MultiIndex(self.J, self.I)


def _sandwich_plan(left: SectorTerms, right: SectorTerms) -> sp.csr_matrix:
    """Sparse matrix of ``X -> sum_a h_a X h_a^dag`` on row-major ``vec(X)``."""
    dl, dr = left.dim, right.dim
    cl, cr = left.counts, right.counts
    # pair every entry of h_a on the left sector with every entry on the right
    reps = cr[left.entry_alpha]
    li = np.repeat(np.arange(len(left.src)), reps)
    starts = np.repeat(right.ptr[:-1][left.entry_alpha], reps)
    offs = np.arange(len(li)) - np.repeat(np.cumsum(reps) - reps, reps)
    ri = starts + offs
    rows = left.dst[li] * dr + right.dst[ri]
    cols = left.src[li] * dr + right.src[ri]
    vals = left.sign[li] * right.sign[ri]
    return sp.csr_matrix((vals, (rows, cols)), shape=(dl * dr, dl * dr))


class LiouvillianTerms:
    """Shared, read-only data for superoperators acting on ``Q_in -> Q_out`` operators."""

    def __init__(self, N: int, q: int, Q_in: int, Q_out: int):
        for Q in (Q_in, Q_out):
            if not 0 <= Q <= N:
                raise SectorError(f"charge {Q} outside [0, {N}]")
        self.N, self.q, self.Q_in, self.Q_out = N, q, Q_in, Q_out
        self.t_in = sector_terms(N, q, Q_in)
        self.t_out = sector_terms(N, q, Q_out)
        self.n_alpha = self.t_in.n_alpha
        self.conj = self.t_in.conj
        self.K = kq_prefactor(q, N)
        self.A_in = np.bincount(self.t_in.dst, minlength=self.t_in.dim).astype(float)
        self.A_out = np.bincount(self.t_out.dst, minlength=self.t_out.dim).astype(float)
        self._plans = {}
        self._stack_mats = {}

    @property
    def shape(self):
        return self.t_out.dim, self.t_in.dim

    def alpha_index(self, alpha: MultiIndex) -> int:
        pos = {t: k for k, t in enumerate(index_tuples(self.N, self.q))}
        try:
            return pos[tuple(alpha.I)] * self.t_in.n_t + pos[tuple(alpha.J)]
        except KeyError:
            raise ValueError(f"{alpha} is not a q={self.q} multi-index on N={self.N} modes") from None

    # -- elementary actions -------------------------------------------------

    def ell(self, a: int, X: np.ndarray) -> np.ndarray:
        """``-i [h_a, X]`` for a ``Q_in -> Q_out`` matrix."""
        return -1j * (self.t_out.left(a, X) - self.t_in.right(a, X))

    def plan(self, kind: str) -> sp.csr_matrix:
        p = self._plans.get(kind)
        if p is None:
            sect = {"o": self.t_out, "i": self.t_in}
            p = _sandwich_plan(sect[kind[0]], sect[kind[1]])
            self._plans[kind] = p
        return p

    def phi(self, X: np.ndarray, kind: str = "oi") -> np.ndarray:
        """``sum_a h_a X h_a^dag``; ``kind`` names the (left, right) sectors."""
        return (self.plan(kind) @ X.ravel()).reshape(X.shape)

    def m2_bare(self, X: np.ndarray) -> np.ndarray:
        """``sum_a l_a l_conj(a) X = -(A X + X A - 2 Phi(X))``."""
        return 2.0 * self.phi(X) - self.A_out[:, None] * X - X * self.A_in[None, :]

    # -- closed forms ---------------------------------------------------------

    def phi_of_term(self, a: int, kind: str) -> sp.csr_matrix:
        """``Phi(h_a)`` as a sparse matrix, from the plan columns hit by ``h_a``."""
        terms = {"o": self.t_out, "i": self.t_in}[kind[0]]
        key = ("csc", kind)
        plan = self._plans.get(key)
        if plan is None:
            plan = self._plans[key] = self.plan(kind).tocsc()
        src, dst, sign = terms.entries(a)
        d = terms.dim
        col = (plan[:, dst * d + src] @ sign).ravel() if len(src) else np.zeros(d * d)
        nz = np.flatnonzero(col)
        return sp.csr_matrix((col[nz], (nz // d, nz % d)), shape=(d, d))

    def m4_bare(self, X: np.ndarray) -> np.ndarray:
        """Sum over the three pairings of four positions (without ``K**4``).

        Per outer multi-index ``a`` (with ``g = h_conj(a)``, ``Y = l_conj(a) X``):
        the nested pairing contributes ``m2_bare(Y)`` and the crossed one
        ``sum_b l_b l_conj(a) l_conj(b) X``. Collapsing the inner sums with
        ``Phi`` and ``A`` leaves

            3 Phi(Y) - A Y - Y A + i [Phi(g) X - X Phi(g) - g Phi(X) + Phi(X) g + g X A - A X g]
        """
        t_in, t_out = self.t_in, self.t_out
        out = self.m2_bare(self.m2_bare(X))
        phiX = self.phi(X)
        square = self.Q_in == self.Q_out
        for a in range(self.n_alpha):
            ab = self.conj[a]
            Y = self.ell(ab, X)
            acc = 3.0 * self.phi(Y) - self.A_out[:, None] * Y - Y * self.A_in[None, :]
            pg_out = self.phi_of_term(ab, "oo")
            pg_in = pg_out if square else self.phi_of_term(ab, "ii")
            gX = t_out.left(ab, X)
            Xg = t_in.right(ab, X)
            cross = (pg_out @ X - (pg_in.T @ X.T).T - t_out.left(ab, phiX) + t_in.right(ab, phiX)
                     + gX * self.A_in[None, :] - self.A_out[:, None] * Xg)
            out = out + self.ell(a, acc + 1j * cross)
        return out

    # -- generic pairing enumerator -------------------------------------------

    def _blocks(self, terms: SectorTerms, alphas, stack_rows: bool) -> sp.csr_matrix:
        """``vstack_k h_{alphas[k]}`` (``stack_rows``) or ``hstack_k h_{alphas[k]}``."""
        d = terms.dim
        rows, cols, vals = [np.zeros(0, np.int64)], [np.zeros(0, np.int64)], [np.zeros(0)]
        for k, a in enumerate(alphas):
            src, dst, sign = terms.entries(a)
            rows.append(dst + k * d if stack_rows else dst)
            cols.append(src if stack_rows else src + k * d)
            vals.append(sign)
        n = len(alphas)
        shape = (n * d, d) if stack_rows else (d, n * d)
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=shape)

    def _stack_ops(self, chunk: tuple[int, int]):
        """Sparse block matrices for the batched label over alphas in ``chunk``."""
        ops = self._stack_mats.get(chunk)
        if ops is None:
            alphas = np.arange(*chunk)
            conj = self.conj[alphas]
            ops = (len(alphas),
                   self._blocks(self.t_out, conj, True),     # rows (k, out): h_{conj a_k} X
                   self._blocks(self.t_in, conj, False),     # X @ hstack h_{conj a_k}
                   self._blocks(self.t_out, alphas, False),  # sum_k h_{a_k} S_k
                   self._blocks(self.t_in, alphas, True))    # sum_k S_k h_{a_k}
            self._stack_mats[chunk] = ops
        return ops

    def _open_stack(self, X, chunk):
        n, open_left, open_right, _, _ = self._stack_ops(chunk)
        do, di = self.shape
        left = (open_left @ X).reshape(n, do, di)
        right = np.asarray(X @ open_right).reshape(do, n, di).transpose(1, 0, 2)
        return -1j * (left - right)

    def _close_stack(self, S, chunk):
        n, _, _, close_left, close_right = self._stack_ops(chunk)
        do, di = self.shape
        left = close_left @ S.reshape(n * do, di)
        right = np.asarray(S.transpose(1, 0, 2).reshape(do, n * di) @ close_right)
        return -1j * (left - right)

    def _ell_stack(self, a: int, S: np.ndarray) -> np.ndarray:
        src, dst, sign = self.t_out.entries(a)
        left = np.zeros_like(S)
        left[:, dst, :] = S[:, src, :] * sign[None, :, None]
        src, dst, sign = self.t_in.entries(a)
        right = np.zeros_like(S)
        right[:, :, src] = S[:, :, dst] * sign
        return -1j * (left - right)

    def _chunks(self):
        do, di = self.shape
        per = max(1, STACK_BUDGET_BYTES // max(1, 16 * do * di))
        return [(lo, min(lo + per, self.n_alpha)) for lo in range(0, self.n_alpha, per)]

    def pattern_bare(self, pattern: Sequence[int], X: np.ndarray) -> np.ndarray:
        """``sum l_{a_p1} ... l_{a_p2n} X`` for one pairing pattern (no ``K`` factors).

        ``pattern[p]`` is the pair label of position ``p`` (position 0 is
        applied last). Each label appears exactly twice.
        """
        pattern = tuple(pattern)
        labels = sorted(set(pattern))
        first = {L: pattern.index(L) for L in labels}
        last = {L: len(pattern) - 1 - pattern[::-1].index(L) for L in labels}
        if any(pattern.count(L) != 2 for L in labels):
            raise ValueError(f"every label must occur twice: {pattern}")

        def inner_opens(L):
            return sum(1 for M in labels if M != L and first[L] < last[M] < last[L])

        batched = min(labels, key=lambda L: (inner_opens(L), last[L] - first[L]))
        chunks = self._chunks()
        result = np.zeros(self.shape, dtype=complex)

        def step(p, state, stacked, fixed, chunk):
            nonlocal result
            if p < 0:
                result += state
                return
            L = pattern[p]
            if L == batched:
                if p == last[L]:
                    for ch in chunks:
                        S = self._open_stack(state, ch)
                        step(p - 1, S, True, fixed, ch)
                else:
                    step(p - 1, self._close_stack(state, chunk), False, fixed, None)
                return
            ell = self._ell_stack if stacked else self.ell
            if p == last[L]:
                for a in range(self.n_alpha):
                    nxt = ell(self.conj[a], state)
                    if not nxt.any():
                        continue
                    step(p - 1, nxt, stacked, {**fixed, L: a}, chunk)
            else:
                step(p - 1, ell(fixed[L], state), stacked, fixed, chunk)

        step(len(pattern) - 1, np.asarray(X, dtype=complex), False, {}, None)
        return result


@functools.lru_cache(maxsize=32)
def liouvillian_terms(N: int, q: int, Q_in: int, Q_out: int) -> LiouvillianTerms:
    return LiouvillianTerms(N, q, Q_in, Q_out)


def terms_for(W: SectorOperator, q: int) -> LiouvillianTerms:
    return liouvillian_terms(W.N, q, W.domain.Q, W.codomain.Q)


def pair_partitions(n_positions: int) -> list[tuple[int, ...]]:
    """All perfect matchings of ``n_positions`` as label patterns (labels by first occurrence)."""
    def rec(slots):
        if not slots:
            yield []
            return
        first, rest = slots[0], slots[1:]
        for k, partner in enumerate(rest):
            for tail in rec(rest[:k] + rest[k + 1:]):
                yield [(first, partner)] + tail

    out = []
    for pairs in rec(list(range(n_positions))):
        pat = [0] * n_positions
        for lab, (i, j) in enumerate(pairs):
            pat[i] = pat[j] = lab
        out.append(tuple(pat))
    return out


def ell_apply(alpha: MultiIndex, W: SectorOperator, q: int | None = None) -> SectorOperator:
    """``-i [h_alpha, W]``; ``W`` may change charge."""
    q = 2 * len(alpha.I) if q is None else q
    if len(alpha.I) != q // 2 or len(alpha.J) != q // 2:
        raise ValueError("multi-index does not match q")
    lt = terms_for(W, q)
    return W.like(lt.ell(lt.alpha_index(alpha), W.matrix))


def _check_order(order: int, N: int, limits=ENUMERATION_LIMITS):
    if order not in (2, 4, 6):
        raise ValueError(f"moment order must be 2, 4 or 6, got {order}")
    if N > limits[order]:
        raise ResourceCapError(f"exact enumeration of order {order} is capped at N={limits[order]}")


def moment_apply(order: int, W: SectorOperator, q: int = 4, *, method: str = "auto",
                 limits=ENUMERATION_LIMITS) -> SectorOperator:
    """Disorder-averaged ``L**order`` applied to ``W`` (``J = 1`` units).

    ``method``: ``'closed'`` (orders 2, 4), ``'pairings'`` (generic enumerator)
    or ``'auto'``.
    """
    _check_order(order, W.N, limits)
    lt = terms_for(W, q)
    X = W.matrix
    if method == "auto":
        method = "closed" if order in (2, 4) else "pairings"
    if method == "closed":
        if order == 2:
            Y = lt.m2_bare(X)
        elif order == 4:
            Y = lt.m4_bare(X)
        else:
            raise ValueError("closed form available for orders 2 and 4 only")
    elif method == "pairings":
        Y = sum(lt.pattern_bare(p, X) for p in pair_partitions(order))
    else:
        raise ValueError(f"unknown method {method!r}")
    return W.like(lt.K ** order * Y)


def c4_literal(W: SectorOperator, q: int = 4) -> SectorOperator:
    """Fourth cumulant from its explicit three-term pairing form.

    ``K^4 sum_{a,b} (l_a l_b l_b' l_a' + l_a l_b l_a' l_b' - 2 l_a l_a' l_b l_b')``
    with primes denoting the conjugate multi-index at the later position.
    """
    lt = terms_for(W, q)
    X = W.matrix
    Y = (lt.pattern_bare((0, 1, 1, 0), X) + lt.pattern_bare((0, 1, 0, 1), X)
         - 2 * lt.pattern_bare((0, 0, 1, 1), X))
    return W.like(lt.K ** 4 * Y)


def extract_cumulant(k: int, W: SectorOperator, q: int = 4, *, limits=ENUMERATION_LIMITS,
                     moments: dict | None = None) -> SectorOperator:
    """Cumulant superoperator ``C_2k`` applied to ``W`` via the moment recursion.

    ``C2 = M2``, ``C4 = M4 - 3 M2 M2``, ``C6 = M6 - 15 M2 M4 + 30 M2 M2 M2``.
    """
    if k not in (1, 2, 3):
        raise ValueError(f"cumulant index k must be 1, 2 or 3, got {k}")
    M = lambda order, X: moment_apply(order, X, q, limits=limits)
    m2 = M(2, W)
    if k == 1:
        return m2
    m22 = M(2, m2)
    if k == 2:
        return M(4, W) - 3 * m22
    return M(6, W) - 15 * M(2, M(4, W)) + 30 * M(2, m22)
