import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import oracle, temporal
from artifact.temporal import TemporalParams

ZETAS = (0.5, 1.0, 2.0)
GAMMAS = (0.0, 0.25, 0.5, 1.0, 2.0)
GRID = np.linspace(0.0, 3.0, 7)


def max_rel_error(p, tau, grid=GRID, **kw):
    rec = oracle.propagate_covariance(p, grid, tau, check_psd=False, **kw)
    T, Tp = np.meshgrid(grid, grid, indexing="ij")
    worst = 0.0
    for num, ref in ((rec.aa, temporal.corr_aa(p, T, Tp)), (rec.bb, temporal.corr_bb(p, T, Tp)),
                     (rec.ba, temporal.corr_ba(p, T, Tp))):
        nz = ref != 0
        assert np.all(num[~nz] == 0)
        worst = max(worst, float(np.max(np.abs(num[nz] - ref[nz]) / np.abs(ref[nz]))))
    return worst


class TestSliceCoefficients:
    def test_growth(self):
        _, _, bb, _ = oracle.slice_coefficients(1.0, 1e-3, 1000)
        assert bb == pytest.approx(1.0005**1000, rel=1e-13)
        assert abs(bb / np.exp(0.5) - 1) == pytest.approx(1e-4, rel=0.3)

    def test_single_slice(self):
        a_b, a_s, b_b, b_s = oracle.slice_coefficients(1.7, 1e-3, 1)
        assert a_b == pytest.approx(np.sqrt(1e-3) * 1.7, rel=1e-15)
        assert a_s.shape == (1,) and b_s.shape == (1,)

    def test_no_coupling(self):
        a_b, a_s, b_b, b_s = oracle.slice_coefficients(0.0, 1e-2, 50)
        assert b_b == 1.0 and a_b == 0.0
        assert np.all(a_s[:-1] == 0) and np.all(b_s == 0)

    @pytest.mark.parametrize("zeta", [0.5, 1.0, 2.0])
    def test_kernel(self, zeta):
        tau, j = 1e-4, 10000
        _, a_s, _, _ = oracle.slice_coefficients(zeta, tau, j)
        t = j * tau
        ti = np.arange(j - 1) * tau
        ref = zeta**2 * np.exp(zeta**2 * (t - ti) / 2)
        assert np.max(np.abs(a_s[:-1] / tau / ref - 1)) < 0.01

    @pytest.mark.parametrize("scheme", ["first_order", "symplectic"])
    def test_schemes_agree_to_first_order(self, scheme):
        _, _, bb, _ = oracle.slice_coefficients(1.0, 1e-4, 10000, scheme=scheme)
        assert bb == pytest.approx(np.exp(0.5), rel=2e-4)

    def test_rejects(self):
        with pytest.raises(ValueError):
            oracle.slice_coefficients(1.0, 0.0, 5)
        with pytest.raises(ValueError):
            oracle.slice_coefficients(1.0, 1e-3, 0, scheme="bogus")


class TestBogoliubov:
    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.0, 2.5), st.floats(1e-4, 1e-2), st.integers(1, 200))
    def test_lossless_exact(self, zeta, tau, j):
        assert oracle.bogoliubov_defect(zeta, tau, j) < 1e-10

    def test_identity(self):
        assert oracle.bogoliubov_defect(0.0, 1e-3, 50, coupling="first_order") == 0.0
        assert oracle.bogoliubov_defect(0.0, 1e-3, 50) == 0.0

    def test_first_order_map_defect(self):
        # the first-order coefficients break the commutators at O(tau)
        d1 = oracle.bogoliubov_defect(1.0, 1e-3, 200, coupling="first_order")
        d2 = oracle.bogoliubov_defect(1.0, 5e-4, 400, coupling="first_order")
        assert d1 > 1e-4
        assert d2 / d1 == pytest.approx(0.5, rel=0.05)

    def test_damping_without_noise(self):
        G, tau = 1.0, 1e-3
        for j in (5, 10, 20):
            d = oracle.bogoliubov_defect(1.0, tau, j, gamma_loss=G, noise=False)
            assert d / j == pytest.approx(2 * G * tau, rel=0.05)

    def test_noise_restores(self):
        off = oracle.bogoliubov_defect(1.0, 1e-3, 100, gamma_loss=1.0, noise=False)
        euler = oracle.bogoliubov_defect(1.0, 1e-3, 100, gamma_loss=1.0)
        exact = oracle.bogoliubov_defect(1.0, 1e-3, 100, gamma_loss=1.0, damping="exact")
        assert euler < 1e-3 * off
        assert exact < 1e-12


class TestPropagateCovariance:
    def test_lossless_growth(self):
        rec = oracle.propagate_covariance(TemporalParams(1.0), [0.0, 1.0], 1e-4)
        assert rec.bb[1, 1] == pytest.approx(np.e - 1, abs=1e-3)

    def test_saturating_curve(self):
        p = TemporalParams(1.0, 1.0)
        grid = np.array([0.0, 1.0, 3.0, 8.0])
        rec = oracle.propagate_covariance(p, grid, 1e-4, check_psd=False)
        np.testing.assert_allclose(np.diag(rec.bb), 1 - np.exp(-grid), rtol=1e-3)
        assert rec.bb[-1, -1] == pytest.approx(1.0, abs=2e-3)

    def test_quarter_loss_grids(self):
        assert max_rel_error(TemporalParams(1.0, 0.25), 1e-4) < 1e-3

    def test_battery(self):
        worst = max(max_rel_error(TemporalParams(z, G), 1e-4) for z in ZETAS for G in GAMMAS)
        assert worst < 1e-3

    def test_first_order(self):
        taus = np.array([1e-2, 1e-3, 1e-4])
        errs = [max_rel_error(TemporalParams(1.0, 0.5), tau) for tau in taus]
        slope = np.polyfit(np.log(taus), np.log(errs), 1)[0]
        assert 0.8 <= slope <= 1.2

    @pytest.mark.parametrize("z, G", [(1.0, 0.0), (1.0, 1.0), (2.0, 0.5)])
    def test_physical(self, z, G):
        rec = oracle.propagate_covariance(TemporalParams(z, G), np.linspace(0, 2, 9), 1e-3)
        assert rec.min_eigenvalue > -1e-10
        assert np.all(np.diag(rec.aa) >= 0) and np.all(np.diag(rec.bb) >= 0)
        d = np.diag(rec.aa)
        assert np.all(rec.aa**2 <= np.outer(d, d) * (1 + 1e-12))

    def test_first_order_scheme_converges(self):
        assert max_rel_error(TemporalParams(1.0, 0.25), 1e-4, coupling="first_order") < 2e-3

    @pytest.mark.parametrize("grid, tau", [([0.0, 0.05], 0.01), ([1.0, 0.5], 1e-3), ([0.0, 1.0], -1.0)])
    def test_rejects(self, grid, tau):
        with pytest.raises(ValueError):
            oracle.propagate_covariance(TemporalParams(1.0), grid, tau)

    def test_unstable_step(self):
        with pytest.raises(ValueError):
            oracle.propagate_covariance(TemporalParams(1.0, 200.0), [0.0, 1.0], 1e-3)
