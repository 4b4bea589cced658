"""Independent brute-force references built from Kronecker products on the full Fock space.

Nothing here touches the package's sparse bookkeeping: fermion operators are
dense 2**N x 2**N Jordan-Wigner matrices, and superoperators are explicit
dim^2 x dim^2 matrices. Only usable for small N.
"""

import itertools
import math
from functools import reduce

import numpy as np

_a = np.array([[0.0, 1.0], [0.0, 0.0]])   # |1> -> |0>
_z = np.diag([1.0, -1.0])
_i = np.eye(2)


def annihilator(i, N):
    """``c_i`` with index == bitmask (mode i <-> bit i-1) and a string over modes below i."""
    # kron order: most significant bit (mode N) first
    factors = [_a if j == i else (_z if j < i else _i) for j in range(N, 0, -1)]
    return reduce(np.kron, factors)


def creator(i, N):
    return annihilator(i, N).T


def monomial(I, J, N):
    mats = [creator(i, N) for i in I] + [annihilator(j, N) for j in J]
    return reduce(np.matmul, mats, np.eye(2 ** N))


def sector_states(N, Q):
    return [s for s in range(2 ** N) if bin(s).count("1") == Q]


def restrict(M, N, Q_in, Q_out=None):
    Q_out = Q_in if Q_out is None else Q_out
    return M[np.ix_(sector_states(N, Q_out), sector_states(N, Q_in))]


def kq(q, N):
    h = q // 2
    return math.sqrt(math.factorial(h) * math.factorial(h - 1) / N ** (q - 1))


def hamiltonian(coupling_matrix, N, q, Q):
    tuples = list(itertools.combinations(range(1, N + 1), q // 2))
    H = np.zeros((2 ** N, 2 ** N), dtype=complex)
    for a, I in enumerate(tuples):
        for b, J in enumerate(tuples):
            H += coupling_matrix[a, b] * monomial(I, J, N)
    return kq(q, N) * restrict(H, N, Q)


def h_alphas(N, q, Q_in, Q_out):
    """All ``(h_alpha on Q_out, h_alpha on Q_in)`` pairs and the conjugation map."""
    tuples = list(itertools.combinations(range(1, N + 1), q // 2))
    n = len(tuples)
    out = []
    for I in tuples:
        for J in tuples:
            full = monomial(I, J, N)
            out.append((restrict(full, N, Q_out), restrict(full, N, Q_in)))
    conj = [b * n + a for a in range(n) for b in range(n)]
    return out, conj


def liouvillian_superops(N, q, Q_in, Q_out):
    """Dense ``l_alpha`` acting on row-major vec(X) of a Q_in -> Q_out matrix."""
    hs, conj = h_alphas(N, q, Q_in, Q_out)
    do, di = hs[0][0].shape[0], hs[0][1].shape[0]
    ops = [-1j * (np.kron(ho, np.eye(di)) - np.kron(np.eye(do), hi.T)) for ho, hi in hs]
    return ops, conj


def moment_bruteforce(order, X, N, q, Q_in, Q_out):
    """Disorder-averaged L**order on X by explicit Wick sums over dense superoperators."""
    S, conj = liouvillian_superops(N, q, Q_in, Q_out)
    n = len(S)
    positions = list(range(order))

    def matchings(slots):
        if not slots:
            yield []
            return
        f, rest = slots[0], slots[1:]
        for k, p in enumerate(rest):
            for tail in matchings(rest[:k] + rest[k + 1:]):
                yield [(f, p)] + tail

    x = np.asarray(X, dtype=complex).ravel()
    total = np.zeros_like(x)
    for pairs in matchings(positions):
        for labels in itertools.product(range(n), repeat=len(pairs)):
            seq = [None] * order
            for (i, j), a in zip(pairs, labels):
                seq[i], seq[j] = a, conj[a]
            v = x
            for a in reversed(seq):
                v = S[a] @ v
                if not v.any():
                    break
            total += v
    return kq(q, N) ** order * total.reshape(np.shape(X))
