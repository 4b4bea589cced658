import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from sykdyn.errors import HermiticityError, NormalizationError, SectorError
from sykdyn.evolution import neel_state
from sykdyn.fock import build_sector
from sykdyn.operators import (expectation, hs_inner_q, identity, monomial_operator, number_operator,
                              staggered_magnetization, trace_q)


def _strings(N, k):
    return [list(c) for r in range(k + 1) for c in itertools.combinations(range(1, N + 1), r)]


def test_number_operator_is_diagonal_projector():
    b = build_sector(6, 3)
    n = monomial_operator([2], [2], b).matrix
    assert np.array_equal(n, np.diag(np.diagonal(n)))
    assert set(np.diagonal(n).real) <= {0.0, 1.0}


@pytest.mark.parametrize("Q", range(5))
def test_monomials_match_jordan_wigner_oracle(Q):
    N = 4
    b = build_sector(N, Q)
    for I in _strings(N, 2):
        for J in _strings(N, 2):
            Qo = Q + len(I) - len(J)
            if not 0 <= Qo <= N:
                with pytest.raises(SectorError):
                    monomial_operator(I, J, b)
                continue
            op = monomial_operator(I, J, b)
            assert op.codomain.Q == Qo
            ref = oracle.restrict(oracle.monomial(I, J, N), N, Q, Qo)
            np.testing.assert_array_equal(op.matrix, ref)
            assert np.all(np.count_nonzero(op.matrix, axis=0) <= 1)


@pytest.mark.parametrize("Q", range(5))
def test_adjoint_is_reversed_monomial(Q):
    N = 4
    b = build_sector(N, Q)
    for I in _strings(N, 2):
        for J in _strings(N, 2):
            Qo = Q + len(I) - len(J)
            if not 0 <= Qo <= N:
                continue
            A = monomial_operator(I, J, b).adjoint()
            B = monomial_operator(J, I, build_sector(N, Qo))
            # reordering each product string inside the adjoint
            sign = (-1) ** (len(I) * (len(I) - 1) // 2 + len(J) * (len(J) - 1) // 2)
            np.testing.assert_array_equal(A.matrix, sign * B.matrix)
            full = oracle.monomial(I, J, N).conj().T
            np.testing.assert_array_equal(A.matrix, oracle.restrict(full, N, Qo, Q))


def test_four_body_support():
    b = build_sector(4, 2)
    op = monomial_operator([1, 2], [3, 4], b)
    col = op.matrix[:, b.index(0b1100)]
    assert abs(col[op.codomain.index(0b0011)]) == 1
    for s in b.states:
        if s & 0b0011:
            assert not op.matrix[:, b.index(int(s))].any()


def test_staggered_magnetization():
    b = build_sector(8, 4)
    R = staggered_magnetization(b)
    assert expectation(neel_state(b), R) == 4
    assert expectation(neel_state(b), R @ R) == 16
    assert trace_q(R) == 0
    # sum_i <n_i> + sum_{i != j} (-1)^(i+j) Q(Q-1)/(N(N-1))
    N, Q = 8, 4
    same = sum((-1) ** (i + j) for i in range(N) for j in range(N) if i != j)
    ref = Q + same * Q * (Q - 1) / (N * (N - 1))
    assert trace_q(R @ R).real / b.dim == pytest.approx(16 / 7, abs=1e-12)
    assert trace_q(R @ R).real / b.dim == pytest.approx(ref, abs=1e-12)


@given(st.integers(2, 8), st.data())
def test_trace_of_r_vanishes_even_n(half, data):
    N = 2 * (half // 2 + 1)
    Q = data.draw(st.integers(0, N))
    assert abs(trace_q(staggered_magnetization(build_sector(N, Q)))) < 1e-12


def test_inner_product_examples():
    b = build_sector(6, 3)
    one = identity(b)
    assert hs_inner_q(one, one) == b.dim
    d = number_operator(1, b) - 0.5
    assert hs_inner_q(d, d).real == pytest.approx(b.dim / 4)
    assert hs_inner_q(monomial_operator([1], [2], b), number_operator(1, b)) == 0
    with pytest.raises(SectorError):
        hs_inner_q(one, monomial_operator([1], [], b))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_inner_product_is_hermitian_form(seed):
    rng = np.random.default_rng(seed)
    b = build_sector(4, 2)
    A = one_random(b, rng)
    B = one_random(b, rng)
    assert hs_inner_q(A, B) == pytest.approx(np.conj(hs_inner_q(B, A)))
    assert hs_inner_q(A, A).real >= 0 and abs(hs_inner_q(A, A).imag) < 1e-12


def one_random(b, rng):
    m = rng.normal(size=(b.dim, b.dim)) + 1j * rng.normal(size=(b.dim, b.dim))
    return identity(b).like(m)


def test_expectation_guards():
    b = build_sector(4, 2)
    psi = neel_state(b)
    assert expectation(psi, identity(b)) == 1
    with pytest.raises(HermiticityError):
        expectation(psi, monomial_operator([1], [2], b))
    with pytest.raises(NormalizationError):
        expectation(2 * psi, identity(b))


def test_rectangular_algebra():
    b = build_sector(4, 1)
    c1 = monomial_operator([1], [], b)
    assert (c1.domain.Q, c1.codomain.Q) == (1, 2)
    prod = c1.adjoint() @ c1
    assert prod.is_square and prod.domain.Q == 1
    with pytest.raises(SectorError):
        c1 @ c1
