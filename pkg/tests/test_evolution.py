import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sykdyn.errors import HermiticityError, SectorError
from sykdyn.evolution import (DynamicsTrace, QuenchParams, diagonalize, disorder_average_dynamics,
                              heisenberg_expectation, heisenberg_operator, neel_state,
                              observable_operator, overlap_series, realization, time_grid)
from sykdyn.fock import build_sector, neel_bitmask
from sykdyn.hamiltonian import build_hamiltonian, sample_couplings
from sykdyn.operators import expectation, identity, monomial_operator, number_operator


def _spec(N=8, Q=4, seed=3):
    H = build_hamiltonian(sample_couplings(N, 4, seed=seed), build_sector(N, Q))
    return H, diagonalize(H)


def test_diagonalize_examples():
    H = build_hamiltonian(sample_couplings(6, 4, seed=0), build_sector(6, 1))
    assert np.all(diagonalize(H).eigenvalues == 0)
    b = build_sector(5, 2)
    assert np.allclose(diagonalize(identity(b)).eigenvalues, 1)
    H, spec = _spec()
    assert spec.eigenvalues.sum() == pytest.approx(np.trace(H.matrix).real, abs=1e-9)
    assert spec.reconstruction_error(H) <= 1e-10 * np.linalg.norm(H.matrix, 2)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    with pytest.raises(HermiticityError):
        diagonalize(monomial_operator([1], [2], b))


def test_neel_state():
    b = build_sector(8, 4)
    psi = neel_state(b)
    assert psi[b.index(0b01010101)] == 1 and np.count_nonzero(psi) == 1
    assert neel_bitmask(8) == 0b01010101
    assert expectation(psi, number_operator(2, b)) == 0
    with pytest.raises(SectorError):
        neel_state(build_sector(8, 3))


def test_expectation_at_zero_and_unitarity():
    H, spec = _spec()
    b = spec.basis
    psi = neel_state(b)
    t = time_grid(3.0, 0.25)
    R = observable_operator("R", b)
    vals = heisenberg_expectation(spec, psi, R, t)
    assert vals[0] == expectation(psi, R) == 4
    np.testing.assert_allclose(heisenberg_expectation(spec, psi, identity(b), t), 1, atol=1e-12)
    # energy is conserved along the trajectory
    e = heisenberg_expectation(spec, psi, H, t)
    np.testing.assert_allclose(e, e[0], atol=1e-9)


def test_matches_direct_propagation():
    H, spec = _spec(6, 3, seed=11)
    b = spec.basis
    psi = neel_state(b)
    R = observable_operator("R", b)
    from scipy.linalg import expm
    for t in (0.3, 1.7):
        phi = expm(-1j * H.matrix * t) @ psi
        assert heisenberg_expectation(spec, psi, R, [t])[0] == pytest.approx(
            np.vdot(phi, R.matrix @ phi).real, abs=1e-10)


def test_long_time_average_matches_diagonal_ensemble():
    _, spec = _spec()
    b = spec.basis
    psi = neel_state(b)
    R = observable_operator("R", b)
    t = np.linspace(10, 20, 2001)
    late = heisenberg_expectation(spec, psi, R, t).mean()
    a = spec.eigenvectors.conj().T @ psi
    diag = np.sum(np.abs(a) ** 2 * np.diagonal(spec.to_eigenbasis(R)).real)
    assert late == pytest.approx(diag, abs=0.15)


def test_heisenberg_operator():
    H, spec = _spec()
    b = spec.basis
    R = observable_operator("R", b)
    assert heisenberg_operator(spec, R, 0.0) is R
    Rt = heisenberg_operator(spec, R, 1.3)
    assert Rt.hs_norm() == pytest.approx(R.hs_norm(), abs=1e-9)
    np.testing.assert_allclose(heisenberg_operator(spec, H, 2.1).matrix, H.matrix, atol=1e-10)
    T = number_operator(1, b) - 0.5
    t = [0.0, 0.4, 1.3]
    ov = overlap_series(spec, T, R, t)
    for ti, o in zip(t, ov):
        assert o == pytest.approx(np.vdot(T.matrix, heisenberg_operator(spec, R, ti).matrix), abs=1e-10)


def test_params_validation():
    with pytest.raises(ValueError):
        QuenchParams(8, samples=1)
    with pytest.raises(ValueError):
        QuenchParams(8, times=[0.1, 0.2])
    assert QuenchParams(9).Q == 4


def test_disorder_average_basics(tmp_path):
    p = QuenchParams(6, Q=3, samples=40, times=time_grid(2.0, 0.5), master_seed=4)
    tr = disorder_average_dynamics(p)
    assert tr.mean[0] == 3 and tr.stderr[0] == 0
    assert tr.samples == 40
    # stderr = sample std / sqrt(n), cross-checked against stored per-sample values
    tr2 = disorder_average_dynamics(p, keep_samples=True)
    per = tr2.meta["per_sample"]
    np.testing.assert_allclose(tr2.mean, per.mean(axis=0), rtol=1e-13, atol=1e-14)
    np.testing.assert_allclose(tr2.stderr, per.std(axis=0, ddof=1) / np.sqrt(40), rtol=1e-10, atol=1e-14)
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    text = path.read_bytes()
    assert text.startswith(b"t,mean,stderr,samples\n") and b"\r" not in text
    assert len(text.splitlines()) == 1 + len(p.times)


def test_thread_count_does_not_change_output(tmp_path):
    base = dict(N=6, Q=3, samples=70, times=time_grid(1.0, 0.25), master_seed=9)
    paths = []
    for threads in (1, 3):
        tr = disorder_average_dynamics(QuenchParams(**base, threads=threads))
        paths.append(tmp_path / f"t{threads}.csv")
        tr.to_csv(paths[-1])
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sample_order_invariance():
    from sykdyn.stats import streamed_moments
    p = QuenchParams(6, Q=3, samples=50, times=time_grid(1.0, 0.5))
    b = build_sector(6, 3)
    R, psi = observable_operator("R", b), neel_state(b)
    vals = {i: heisenberg_expectation(realization(p, i)[2], psi, R, p.times) for i in range(50)}
    perm = np.random.default_rng(0).permutation(50)
    a = streamed_moments(lambda i: vals[i], 50)
    c = streamed_moments(lambda i: vals[int(perm[i])], 50)
    np.testing.assert_allclose(a.mean, c.mean, rtol=1e-12)
    np.testing.assert_allclose(a.variance, c.variance, rtol=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**40))
def test_charge_is_conserved(seed):
    _, spec = _spec(6, 3, seed=seed)
    U = spec.eigenvectors
    # the evolution never leaves the sector: the propagator is unitary on it
    np.testing.assert_allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=1e-10)


@pytest.mark.slow
def test_relaxation_to_infinite_temperature():
    """Late-time averages approach the sector's infinite-temperature values.

    At N=8 the Gaussian decay time sets relaxation around Jt ~ 4-5, so the
    window is taken after that.
    """
    times = time_grid(8.0, 0.5)
    for obs, target in (("R", 0.0), ("R2", 16 / 7)):
        tr = disorder_average_dynamics(QuenchParams(8, samples=500, observable=obs, times=times))
        late = times >= 6.0
        assert np.all(np.abs(tr.mean[late] - target) < 4 * tr.stderr[late] + 0.1)
