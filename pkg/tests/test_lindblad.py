import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oscrelax.effective import LindbladChannel
from oscrelax.errors import NoConvergence, StepRejected
from oscrelax.lindblad import (
    DensityMatrix, FockBasis, Liouvillian, StepAudit, TimeSeries, annihilation, build_ops,
    dissipator_apply, evolve, fock_state, sector_mask, steady_state, step, thermal_state,
)
from oscrelax.oracle import fit_decay

# small truncations are deliberate in many of these checks
pytestmark = pytest.mark.filterwarnings("ignore:top Fock levels")


def ch(mode, rate, occ=0.0):
    return LindbladChannel(mode, rate, occ)


def random_state(basis, rng, support=None):
    """Random full-rank-on-support density matrix."""
    d = basis.dim
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if support is not None:
        keep = np.zeros(d, bool)
        for nc in range(min(support, basis.dim_c)):
            for nr in range(min(support, basis.dim_r)):
                keep[basis.index(nc, nr)] = True
        x[~keep, :] = 0
    rho = x @ x.conj().T
    return rho / np.trace(rho).real


def reference_L(rho, channels, basis, detuning=None):
    ops = build_ops(basis)
    out = sum((dissipator_apply(rho, c, ops) for c in channels), np.zeros_like(rho))
    if detuning is not None:
        h = (detuning[0] * ops.c.conj().T @ ops.c + detuning[1] * ops.r.conj().T @ ops.r)
        out = out - 1j * (h @ rho - rho @ h)
    return out


class TestOperators:
    def test_dim2(self):
        np.testing.assert_array_equal(annihilation(2), [[0, 1], [0, 0]])

    def test_dim3(self):
        a = annihilation(3)
        assert a[0, 1] == 1 and a[1, 2] == pytest.approx(math.sqrt(2))
        assert np.count_nonzero(a) == 2

    def test_embedding_commutes(self):
        ops = build_ops(FockBasis(3, 4))
        assert np.abs(ops.c @ ops.r - ops.r @ ops.c).max() == 0
        assert ops.c.shape == (12, 12)

    def test_canonical_commutator_below_top_level(self):
        a = annihilation(6)
        comm = a @ a.conj().T - a.conj().T @ a
        np.testing.assert_allclose(np.diag(comm)[:-1], 1.0)
        assert comm[-1, -1] == pytest.approx(-5)

    def test_flat_index_c_outer(self):
        b = FockBasis(3, 4)
        assert b.index(2, 1) == 9
        ops = build_ops(b)
        n_c = np.diag(ops.c.conj().T @ ops.c).real
        assert n_c[b.index(2, 1)] == pytest.approx(2)

    def test_small_basis_rejected(self):
        with pytest.raises(ValueError):
            FockBasis(1, 4)


class TestThermalState:
    def test_zero(self):
        np.testing.assert_array_equal(thermal_state(0.0, 4), fock_state(0, 4))

    def test_unit_occupation(self):
        p = np.diag(thermal_state(1.0, 60)).real
        assert p[0] == pytest.approx(0.5) and p[1] == pytest.approx(0.25)

    def test_tail_at_dim_15(self):
        # geometric law: p_n = (1 - x) x^n / (1 - x^d), x = n/(n+1) = 1/3
        x = 1 / 3
        p = np.diag(thermal_state(0.5, 15)).real
        assert p[14] == pytest.approx((1 - x) * x ** 14 / (1 - x ** 15), rel=1e-12)
        assert p[14] == pytest.approx(1.39e-7, rel=1e-2)

    def test_mean_up_to_truncation(self):
        p = np.diag(thermal_state(0.5, 40)).real
        assert np.arange(40) @ p == pytest.approx(0.5, abs=1e-15)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            thermal_state(-0.1, 3)


class TestDissipator:
    def test_thermal_state_is_stationary(self):
        b = FockBasis(12, 2)
        rho = DensityMatrix.thermal(b, 0.7, 0.0).rho
        out = dissipator_apply(rho, ch("c", 0.3, 0.7), build_ops(b))
        assert np.abs(out).max() < 1e-15

    def test_decay_of_one_quantum(self):
        b = FockBasis(4, 2)
        rho = DensityMatrix.product(fock_state(1, 4), fock_state(0, 2)).rho
        ops = build_ops(b)
        out = dissipator_apply(rho, ch("c", 0.01), ops)
        assert np.trace(ops.c.conj().T @ ops.c @ out).real == pytest.approx(-0.01, rel=1e-14)

    def test_zero_rate(self):
        b = FockBasis(3, 3)
        out = dissipator_apply(DensityMatrix.vacuum(b).rho, ch("r", 0.0, 1.0), build_ops(b))
        assert not out.any()

    def test_traceless(self):
        b = FockBasis(5, 5)
        rho = random_state(b, np.random.default_rng(0), support=3)
        for c in (ch("c", 0.2, 0.4), ch("r", 0.1, 1.3)):
            assert abs(np.trace(dissipator_apply(rho, c, build_ops(b)))) < 1e-14


class TestLiouvillian:
    def test_matches_reference(self):
        b = FockBasis(5, 4)
        chans = [ch("c", 0.3, 0.5), ch("r", 0.07, 1.2)]
        rho = random_state(b, np.random.default_rng(1))
        np.testing.assert_allclose(Liouvillian(b, chans)(rho), reference_L(rho, chans, b),
                                   atol=1e-14)

    def test_detuning_term(self):
        b = FockBasis(4, 3)
        chans = [ch("c", 0.1, 0.2)]
        rho = random_state(b, np.random.default_rng(2))
        got = Liouvillian(b, chans, (0.03, -0.01))(rho)
        np.testing.assert_allclose(got, reference_L(rho, chans, b, (0.03, -0.01)), atol=1e-14)

    def test_sector_path_equals_dense_path(self):
        b = FockBasis(7, 6)
        chans = [ch("c", 0.2, 0.5), ch("r", 0.1, 0.3)]
        rho = DensityMatrix.thermal(b, 0.5, 0.3).rho
        rho[b.index(1, 0), b.index(0, 1)] = rho[b.index(0, 1), b.index(1, 0)] = 0.01
        L = Liouvillian(b, chans)
        mask = sector_mask(rho, b)
        assert 0 < mask.sum() < mask.size
        np.testing.assert_allclose(L.apply(rho, active=mask), L.apply(rho), atol=1e-16)
        np.testing.assert_allclose(L.rk4(rho, 0.1, mask), L.rk4(rho, 0.1, np.ones_like(mask)),
                                   atol=1e-16)

    def test_one_channel_per_mode(self):
        with pytest.raises(ValueError):
            Liouvillian(FockBasis(3, 3), [ch("c", 0.1), ch("c", 0.2)])

    def test_suggest_dt(self):
        assert math.isinf(Liouvillian(FockBasis(3, 3), []).suggest_dt())
        assert Liouvillian(FockBasis(10, 3), [ch("c", 0.1, 0.5)]).suggest_dt() > 0


@settings(max_examples=25)
@given(dc=st.integers(2, 5), dr=st.integers(2, 5), gc=st.floats(0, 1), gr=st.floats(0, 1),
       nc=st.floats(0, 2), nr=st.floats(0, 2), seed=st.integers(0, 2 ** 16))
def test_kernel_matches_reference(dc, dr, gc, gr, nc, nr, seed):
    b = FockBasis(dc, dr)
    chans = [ch("c", gc, nc), ch("r", gr, nr)]
    rho = random_state(b, np.random.default_rng(seed))
    np.testing.assert_allclose(Liouvillian(b, chans)(rho), reference_L(rho, chans, b), atol=1e-13)


@settings(max_examples=25)
@given(gc=st.floats(0, 0.5), gr=st.floats(0, 0.5), nc=st.floats(0, 1), nr=st.floats(0, 1),
       seed=st.integers(0, 2 ** 16))
def test_step_preserves_state_properties(gc, gr, nc, nr, seed):
    b = FockBasis(8, 8)
    rho = random_state(b, np.random.default_rng(seed), support=3)
    audit = StepAudit()
    out = step(DensityMatrix(rho, b), [ch("c", gc, nc), ch("r", gr, nr)], 0.05, audit=audit)
    assert abs(out.trace() - 1) < 1e-12
    assert out.hermiticity_error() == 0.0
    assert out.min_eigenvalue() > -1e-12
    assert audit.max_step_drift < 1e-12


class TestStep:
    def test_no_dissipation_is_identity(self):
        b = FockBasis(4, 4)
        rho = random_state(b, np.random.default_rng(3))
        rho = 0.5 * (rho + rho.conj().T)
        out = step(DensityMatrix(rho, b), [ch("c", 0.0), ch("r", 0.0)], 0.3)
        np.testing.assert_array_equal(out.rho, rho)
        assert out.tbar == pytest.approx(0.3)

    def test_closed_form_relaxation(self):
        b = FockBasis(30, 2)
        gamma, nbar, dt = 0.1, 0.5, 0.01
        series = evolve(DensityMatrix.vacuum(b), [ch("c", gamma, nbar)], 1000 * dt, dt, 100)
        want = nbar * (1 - np.exp(-gamma * series.tbar))
        assert np.abs(series.n_c - want).max() < 1e-6
        assert series.audit.steps == 1000

    def test_thermal_product_is_stationary(self):
        b = FockBasis(15, 15)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            state = DensityMatrix.thermal(b, 0.5, 0.2)
        out = step(state, [ch("c", 0.05, 0.5), ch("r", 0.01, 0.2)], 0.5)
        assert np.abs(out.rho - state.rho).max() < 1e-10

    def test_unstable_step_size_rejected(self):
        # dt far outside the RK4 stability region: roundoff on the growing stiff
        # modes eventually shows up as trace drift
        b = FockBasis(30, 2)
        with pytest.raises(StepRejected):
            evolve(DensityMatrix.vacuum(b), [ch("c", 0.1, 0.5)], 20.0, 0.5)

    def test_nonpositive_dt(self):
        with pytest.raises(ValueError):
            step(DensityMatrix.vacuum(FockBasis(2, 2)), [], 0.0)


class TestEvolve:
    def test_zero_duration(self):
        b = FockBasis(4, 4)
        s = evolve(DensityMatrix.thermal(b, 0.2, 0.1), [ch("c", 0.1, 0.3)], 0.0, 0.1)
        assert len(s.tbar) == 1 and s.tbar[0] == 0
        assert s.n_c[0] == pytest.approx(DensityMatrix.thermal(b, 0.2, 0.1).number("c"))

    def test_time_strictly_increasing_and_lands_on_final(self):
        s = evolve(DensityMatrix.vacuum(FockBasis(6, 6)), [ch("c", 0.1, 0.2)], 1.0, 0.3, 2)
        assert np.all(np.diff(s.tbar) > 0)
        assert s.tbar[-1] == pytest.approx(1.0)
        assert s.dt == pytest.approx(0.25)

    def test_modes_evolve_independently(self):
        b = FockBasis(12, 12)
        chans = [ch("c", 0.2, 0.5), ch("r", 0.05, 0.2)]
        joint = evolve(DensityMatrix.vacuum(b), chans, 10.0, 0.1, 10)
        only_c = evolve(DensityMatrix.vacuum(FockBasis(12, 2)), chans[:1], 10.0, 0.1, 10)
        only_r = evolve(DensityMatrix.vacuum(FockBasis(2, 12)), [ch("r", 0.05, 0.2)], 10.0, 0.1, 10)
        np.testing.assert_allclose(joint.n_c, only_c.n_c, atol=1e-12)
        np.testing.assert_allclose(joint.n_r, only_r.n_r, atol=1e-12)
        # the joint state stays the product of its marginals
        fin = joint.final
        prod = np.kron(fin.reduced("c"), fin.reduced("r"))
        assert np.abs(fin.rho - prod).max() < 1e-10
        assert fin.mutual_information() <= 1e-8

    def test_slow_mode_relaxes_by_rate_ratio(self):
        b = FockBasis(20, 20)
        gc, gr = 0.2, 0.01
        s = evolve(DensityMatrix.vacuum(b), [ch("c", gc, 0.5), ch("r", gr, 0.5)], 60.0, 0.1, 5)
        fc, fr = fit_decay(s.tbar, s.n_c), fit_decay(s.tbar, s.n_r)
        assert (fc.rate / fr.rate) == pytest.approx(gc / gr, rel=0.05)

    def test_moment_closure(self):
        b = FockBasis(25, 2)
        gamma, nbar, dt = 0.2, 0.4, 0.01
        rho0 = DensityMatrix.product(thermal_state(1.5, 25), fock_state(0, 2))
        s = evolve(rho0, [ch("c", gamma, nbar)], 5.0, dt, 1)
        deriv = np.gradient(s.n_c, s.tbar, edge_order=2)
        np.testing.assert_allclose(deriv, -gamma * (s.n_c - nbar), atol=1e-5)

    def test_rk4_order(self):
        b = FockBasis(18, 2)
        gamma, nbar, t = 0.1, 0.3, 20.0
        errs = []
        for dt in (0.5, 0.25):
            s = evolve(DensityMatrix.vacuum(b), [ch("c", gamma, nbar)], t, dt, 1)
            errs.append(np.abs(s.n_c - nbar * (1 - np.exp(-gamma * s.tbar))).max())
        assert errs[0] / errs[1] == pytest.approx(16, rel=0.2)

    def test_truncation_warning(self):
        b = FockBasis(4, 2)
        with pytest.warns(RuntimeWarning, match="truncation"):
            evolve(DensityMatrix.vacuum(b), [ch("c", 0.5, 2.0)], 2.0, 0.05, 10)

    def test_csv(self, tmp_path):
        s = evolve(DensityMatrix.vacuum(FockBasis(5, 5)), [ch("c", 0.1, 0.3)], 1.0, 0.5)
        path = tmp_path / "series.csv"
        s.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "tbar,n_c,n_r,trace,purity"
        assert len(lines) == 4
        assert float(lines[-1].split(",")[0]) == 1.0
        assert TimeSeries.HEADER == tuple(lines[0].split(","))


class TestSteadyState:
    def test_vacuum_fixed_point(self):
        b = FockBasis(5, 5)
        start = DensityMatrix.thermal(b, 0.3, 0.2)
        ss = steady_state(start, [ch("c", 0.5), ch("r", 0.5)], tol=1e-11)
        assert ss.purity() == pytest.approx(1.0, abs=1e-9)
        assert ss.number("c") < 1e-10

    def test_thermal_start_returns_immediately(self):
        b = FockBasis(8, 8)
        start = DensityMatrix.thermal(b, 0.3, 0.2)
        ss = steady_state(start, [ch("c", 0.1, 0.3), ch("r", 0.1, 0.2)], tol=1e-10)
        assert ss.tbar == start.tbar
        np.testing.assert_array_equal(ss.rho, start.rho)

    def test_no_convergence(self):
        with pytest.raises(NoConvergence):
            steady_state(DensityMatrix.vacuum(FockBasis(6, 6)), [ch("c", 0.01, 0.5)],
                         tol=1e-12, max_steps=10)
