import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact import coupling, geometry, modes, specfun
from artifact.coupling import CouplingBlock

# Leading (zeta, l, m) of the converged default-truncation spectra (l_max=40, n_z=41, m_max=5).
# Frozen from the first converged run; stable to < 4e-7 under l_max 40->60, n_z 41->61.
FROZEN = {
    ("a", 0.1): [(0.638174243, 0, 0), (0.485948337, 1, 0), (0.430264433, 0, 1),
                 (0.422570404, 2, 0), (0.390707669, 1, 1), (0.385831191, 3, 0)],
    ("b", 0.1): [(0.722526299, 0, 0), (0.534946841, 1, 0), (0.533814436, 0, 1),
                 (0.479905665, 1, 1), (0.477527825, 2, 0), (0.442718068, 2, 1)],
    ("a", 10.0): [(1.102367793, 0, 0), (1.085731721, 0, 1), (1.070333354, 1, 0),
                  (1.06958825, 0, 2), (1.055345427, 1, 1), (1.05391946, 0, 3)],
    ("b", 10.0): [(0.990969777, 0, 0), (0.982053777, None, None), (0.973445696, None, None),
                  (0.973250558, None, None), (0.964944089, None, None), (0.964558702, None, None)],
}


def _synthetic_rank1(n_l=6, n_z=9):
    red = geometry.reduced("b", 1.0)
    z, w = coupling.axial_grid(red, n_z)
    u = np.zeros(n_l, dtype=complex)
    u[0] = 1.0
    v = np.linspace(1, 2, n_l) * np.exp(0.3j * np.arange(n_l))
    g = np.cos(z) + 0.2j * z
    H = u[:, None, None] * v[None, :, None] * g[None, None, :]
    return red, CouplingBlock(m=1, l_max=n_l - 1, z_nodes=z, z_weights=w, elements=H)


class TestDecompose:
    @pytest.mark.parametrize("regime, F", [("a", 0.1), ("b", 10.0), ("a", 1.0)])
    def test_orthonormality_and_reconstruction(self, regime, F):
        blk = coupling.build_block(geometry.reduced(regime, F), 2, 40, 41)
        dec = modes.decompose(blk)
        k = dec.n_modes
        s = dec.singular_values
        assert np.all(s >= 0) and np.all(np.diff(s) <= 0)
        assert np.max(np.abs(dec.photon_coeffs @ dec.photon_coeffs.conj().T - np.eye(k))) < 1e-10
        ca = (dec.atomic_coeffs * np.sqrt(dec.z_weights)).reshape(k, -1)
        assert np.max(np.abs(ca @ ca.conj().T - np.eye(k))) < 1e-10
        err = np.abs(dec.reconstruct() - blk.elements)
        assert err.max() < 1e-8
        wnorm = np.sqrt(np.sum(np.abs(blk.elements) ** 2 * blk.z_weights))
        assert np.sqrt(np.sum(err**2 * blk.z_weights)) < 1e-8 * wnorm

    def test_rank_one(self):
        _, blk = _synthetic_rank1()
        s = modes.decompose(blk).singular_values
        assert s[1] / s[0] < 1e-12

    def test_gauge_m0(self):
        dec = modes.decompose(coupling.build_block(geometry.reduced("b", 1.0), 0, 10, 11))
        on_axis = dec.photon_coeffs.sum(axis=1)
        big = np.abs(on_axis) > 1e-8
        assert np.all(np.abs(on_axis[big].imag) < 1e-12) and np.all(on_axis[big].real > 0)

    def test_plus_minus_m(self):
        red = geometry.reduced("b", 2.0)
        for m in (1, 3):
            a = modes.decompose(coupling.build_block(red, m, 12, 13)).singular_values
            b = modes.decompose(coupling.build_block(red, -m, 12, 13)).singular_values
            np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)

    def test_conjugate_pump(self):
        # conjugating every element (pump curvature -> -curvature, Gouy phase reversed)
        red = geometry.reduced("b", 2.0)
        blk = coupling.build_block(red, 2, 12, 13)
        cblk = CouplingBlock(2, 12, blk.z_nodes, blk.z_weights, blk.elements.conj())
        np.testing.assert_allclose(modes.decompose(blk).singular_values,
                                   modes.decompose(cblk).singular_values, rtol=0, atol=1e-12)


class TestSpectrum:
    @pytest.mark.parametrize("key", list(FROZEN))
    def test_frozen_values(self, default_decs, key):
        spec = modes.spectrum(default_decs(*key))
        for (z, l, m), row in zip(FROZEN[key], spec):
            assert row[2] == pytest.approx(z, abs=2e-9)
            if l is not None:
                assert (row[0], row[1]) == (l, m)

    @pytest.mark.parametrize("regime", ["a", "b"])
    def test_ratio_larger_at_high_fresnel(self, default_decs, regime):
        def ratio(F):
            s = modes.spectrum(default_decs(regime, F))
            return s[1][2] / s[0][2]
        assert ratio(10.0) > ratio(0.1)

    @pytest.mark.parametrize("regime", ["a", "b"])
    def test_fundamental_dominates_low_fresnel(self, default_decs, regime):
        s = modes.spectrum(default_decs(regime, 0.1))
        assert (s[0][0], s[0][1]) == (0, 0)
        assert s[0][2] > s[1][2]

    def test_row_count_and_sign(self, default_decs):
        s = modes.spectrum(default_decs("a", 0.1))
        assert len(s) == 6 * 41
        assert all(r[2] >= 0 for r in s)

    def test_single_m(self, default_decs):
        dec = default_decs("b", 10.0)[2]
        s = modes.spectrum([dec])
        assert [r[2] for r in s] == list(dec.singular_values)
        assert [r[0] for r in s] == list(range(dec.n_modes))

    def test_physical_scale(self):
        g = geometry.ExperimentGeometry.from_fresnel("b", 1.0)
        g = geometry.ExperimentGeometry(g.regime, g.sigma, g.sigma_z, g.k_s, g.kappa, coupling_prefactor=3.0)
        red = geometry.reduce(g)
        s = modes.spectrum([modes.decompose(coupling.build_block(red, 0, 6, 9))], red, g)
        assert all(r[3] == pytest.approx(3 * r[2], rel=1e-15) for r in s)

    @pytest.mark.parametrize("key", [("a", 0.1), ("b", 0.1), ("a", 10.0), ("b", 10.0)])
    def test_truncation_stability(self, default_decs, key):
        coarse = np.array([r[2] for r in modes.spectrum(default_decs(*key))[:5]])
        fine = np.array([r[2] for r in modes.spectrum(default_decs(*key, l_max=60, n_z=61))[:5]])
        assert np.max(np.abs(coarse - fine) / fine) < 1e-6


class TestModeFunctions:
    def test_rank_one_photon_is_lg(self):
        red, blk = _synthetic_rank1()
        dec = modes.decompose(blk)
        rho = np.linspace(0, 3, 7) * red.waist
        for z in (-0.3, 0.0, 0.4):
            psi = modes.photon_mode_eval(dec, 0, rho, z, red)
            np.testing.assert_allclose(psi, specfun.lg_mode(0, 1, rho, z, red.waist, red.k_s), atol=1e-14)

    @pytest.mark.parametrize("z", [-0.4, 0.0, 0.31])
    def test_photon_norm(self, default_decs, z):
        red = geometry.reduced("b", 10.0)
        dec = default_decs("b", 10.0)[1]
        x, wt = np.polynomial.legendre.leggauss(300)
        R = 20 * red.waist
        rho = 0.5 * R * (x + 1)
        for k in range(3):
            psi = modes.photon_mode_eval(dec, k, rho, z, red)
            assert np.sum(np.pi * R * wt * rho * np.abs(psi) ** 2) == pytest.approx(1.0, abs=1e-10)

    def test_radial_nodes(self, default_decs):
        red = geometry.reduced("b", 10.0)
        dec = default_decs("b", 10.0)[0]
        rho = np.linspace(0, 4, 801)[1:] * red.waist

        def crossings(k):
            p = modes.photon_mode_eval(dec, k, rho, 0.0, red)
            p = (p * np.exp(-1j * np.angle(p[0]))).real
            keep = np.abs(p) > 1e-6 * np.abs(p).max()
            return np.count_nonzero(np.diff(np.sign(p[keep])))

        assert crossings(0) == 0
        assert crossings(1) == 1

    def test_atomic_nodes_exact(self, default_decs):
        dec = default_decs("a", 10.0)[0]
        for j in (0, 7, 20, 40):
            np.testing.assert_array_equal(modes.atomic_coeffs_at(dec, 2, dec.z_nodes[j]), dec.atomic_coeffs[2][:, j])

    def test_atomic_outside_range(self, default_decs):
        dec = default_decs("b", 10.0)[0]
        with pytest.raises(ValueError):
            modes.atomic_coeffs_at(dec, 0, 0.5)

    def test_atomic_interpolation_accuracy(self):
        red = geometry.reduced("a", 1.0)
        dec = modes.decompose(coupling.build_block(red, 0, 30, 41))
        fine = modes.decompose(coupling.build_block(red, 0, 30, 61))
        j = 30
        c = modes.atomic_coeffs_at(dec, 0, fine.z_nodes[j])
        np.testing.assert_allclose(c, fine.atomic_coeffs[0][:, j], atol=1e-6)

    def test_atomic_fundamental_on_axis(self, default_decs):
        red = geometry.reduced("b", 10.0)
        dec = default_decs("b", 10.0)[0]
        rho = np.linspace(0, 4, 81) * red.waist
        for z in np.linspace(-0.45, 0.45, 7):
            a = np.abs(modes.atomic_mode_eval(dec, 0, rho, z * red.sigma_z, red))
            assert a[0] >= a.max()

    def test_atomic_joint_norm(self, default_decs):
        dec = default_decs("a", 0.1)[0]
        for k in range(3):
            assert np.sum(np.abs(dec.atomic_coeffs[k]) ** 2 * dec.z_weights) == pytest.approx(1.0, abs=1e-12)

    def test_bad_index(self, default_decs):
        dec = default_decs("a", 0.1)[0]
        with pytest.raises(IndexError):
            modes.photon_mode_eval(dec, 41, 0.0, 0.0, geometry.reduced("a", 0.1))


class TestDecayRates:
    def test_no_diffusion(self, default_decs):
        dec = default_decs("b", 10.0)[0]
        np.testing.assert_array_equal(modes.mode_decay_rates(dec, 0.3, 0.0), np.full(dec.n_modes, 0.3))

    def test_gradient_ordering(self):
        red = geometry.reduced("b", 10.0)
        dec = modes.decompose(coupling.build_block(red, 0, 20, 21))
        G = modes.transverse_gradient_energy(dec, red)
        assert np.all(G >= 0)
        rates = modes.mode_decay_rates(dec, 0.1, 1.0, red)
        assert rates[1] > rates[0]

    def test_requires_geometry(self, default_decs):
        with pytest.raises(ValueError):
            modes.mode_decay_rates(default_decs("b", 10.0)[0], 0.1, 1.0)
        with pytest.raises(ValueError):
            modes.mode_decay_rates(default_decs("b", 10.0)[0], -0.1, 0.0)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.0, 2.0), st.floats(0.0, 2.0))
    def test_monotone_in_diffusion(self, g0, D):
        red = geometry.reduced("b", 1.0)
        dec = modes.decompose(coupling.build_block(red, 1, 6, 9))
        r1 = modes.mode_decay_rates(dec, g0, D, red)
        r2 = modes.mode_decay_rates(dec, g0, D + 0.5, red)
        assert np.all(r1 >= g0) and np.all(r2 >= r1)
