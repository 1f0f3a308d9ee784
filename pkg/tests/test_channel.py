"""Channel statistics: path gain, sinc correlation, sampling, cascaded gain."""

import numpy as np
import pytest
from scipy import stats

from risid.channel import (
    CorrelationMatrix,
    LinkBudget,
    RisGeometry,
    cascaded_gain,
    correlation_matrix,
    identity_correlation,
    path_gain,
    sample_channel,
)

C0 = 299792458.0


class TestPathGain:
    def test_reference_point(self):
        # independent recomputation, factored differently
        lam = C0 / 1.8e9
        expected = (lam / (4 * np.pi * 10 * 50)) ** 2 * lam**2 / 16
        got = path_gain(1.8e9, 10.0, 50.0)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(1.218e-12, rel=1e-3)
        assert lam == pytest.approx(0.16655, rel=1e-4)

    def test_inverse_square_in_distance(self):
        assert path_gain(1.8e9, 20, 50) == pytest.approx(
            path_gain(1.8e9, 10, 50) / 4, rel=1e-12
        )

    def test_quartic_in_wavelength(self):
        assert path_gain(3.6e9, 10, 50) == pytest.approx(
            path_gain(1.8e9, 10, 50) / 16, rel=1e-12
        )

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            path_gain(1.8e9, 0.0, 50.0)

    def test_link_budget_split(self):
        link = LinkBudget.from_distances(1.8e9, 10, 50)
        assert link.beta == pytest.approx(path_gain(1.8e9, 10, 50), rel=1e-12)
        assert link.beta_ur == pytest.approx(link.beta_rb)


class TestCorrelationMatrix:
    def test_half_wavelength_adjacent_is_zero(self):
        lam = 0.1665
        geom = RisGeometry(n=4, n_h=2, d_h=lam / 2, d_v=lam / 2, wavelength=lam)
        corr = correlation_matrix(geom)
        assert abs(corr.r[0, 1]) < 1e-12  # adjacent in a row: sinc(1)
        assert abs(corr.r[0, 2]) < 1e-12  # adjacent in a column

    def test_unit_diagonal_and_symmetry_exact(self):
        lam = 0.2
        geom = RisGeometry(n=16, n_h=4, d_h=lam / 3, d_v=lam / 5, wavelength=lam)
        corr = correlation_matrix(geom)
        assert np.all(np.diag(corr.r) == 1.0)
        assert np.array_equal(corr.r, corr.r.T)

    def test_small_matrix_against_direct_formula(self):
        lam = 0.1665
        d = lam / 10
        geom = RisGeometry(n=4, n_h=2, d_h=d, d_v=d, wavelength=lam)
        corr = correlation_matrix(geom)
        pos = [np.array([0, (w % 2) * d, (w // 2) * d]) for w in range(4)]
        for i in range(4):
            for j in range(4):
                tau = 2 * np.linalg.norm(pos[i] - pos[j]) / lam
                want = 1.0 if tau == 0 else np.sin(np.pi * tau) / (np.pi * tau)
                assert corr.r[i, j] == pytest.approx(want, abs=1e-12)

    def test_factor_reproduces_matrix(self):
        lam = 0.1665
        geom = RisGeometry(n=64, n_h=8, d_h=lam / 10, d_v=lam / 10, wavelength=lam)
        corr = correlation_matrix(geom)
        assert np.allclose(corr.factor @ corr.factor.T, corr.r, atol=1e-8)

    def test_clipping_floor_enforced(self):
        lam = 0.1665
        geom = RisGeometry(n=64, n_h=8, d_h=lam / 10, d_v=lam / 10, wavelength=lam)
        with pytest.raises(ValueError, match="PSD"):
            correlation_matrix(geom, eig_floor=-1e-30)

    def test_geometry_validation(self):
        with pytest.raises(ValueError):
            RisGeometry(n=6, n_h=4, d_h=0.1, d_v=0.1, wavelength=0.2)


class TestSampleChannel:
    def test_identity_statistics(self):
        rng = np.random.default_rng(5)
        corr = identity_correlation(4)
        draws = sample_channel(corr, 1.0, rng, size=100_000)
        var = np.mean(np.abs(draws) ** 2, axis=0)
        se = 1.0 / np.sqrt(draws.shape[0])
        assert np.all(np.abs(var - 1.0) < 3 * se * np.sqrt(2))
        cross = np.mean(draws[:, 0] * np.conj(draws[:, 1]))
        assert abs(cross) < 4 * se

    def test_zero_mean(self):
        rng = np.random.default_rng(6)
        corr = identity_correlation(3)
        draws = sample_channel(corr, 2.0, rng, size=50_000)
        assert np.all(np.abs(draws.mean(axis=0)) < 4 * np.sqrt(2.0 / 50_000))

    def test_constructed_correlation_recovered(self):
        rng = np.random.default_rng(7)
        r = np.array([[1.0, 0.5], [0.5, 1.0]])
        w, v = np.linalg.eigh(r)
        corr = CorrelationMatrix(r=r, factor=v * np.sqrt(w))
        draws = sample_channel(corr, 1.0, rng, size=100_000)
        emp = np.mean(draws[:, 0] * np.conj(draws[:, 1])).real
        assert emp == pytest.approx(0.5, abs=3 / np.sqrt(100_000))

    def test_reproducible_bit_for_bit(self):
        corr = identity_correlation(8)
        a = sample_channel(corr, 0.3, np.random.default_rng(123), size=16)
        b = sample_channel(corr, 0.3, np.random.default_rng(123), size=16)
        assert np.array_equal(a, b)


class TestCascadedGain:
    def test_arithmetic(self):
        n = 4
        h_u = np.full(n, 0.5 + 0j)
        h_b = np.full(n, 0.5 + 0j)  # sum of products = 1
        assert cascaded_gain(h_u, h_b, 4.0) == pytest.approx(2.0)

    def test_zero_vector(self):
        assert cascaded_gain(np.zeros(3), np.ones(3), 1.0) == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cascaded_gain(np.ones(3), np.ones(4), 1.0)

    def test_variance_matches_clt_scale(self):
        rng = np.random.default_rng(11)
        n, p, beta = 256, 2.0, 0.5
        draws = 100_000
        corr = identity_correlation(n)
        hu = sample_channel(corr, np.sqrt(beta), rng, size=draws)
        hb = sample_channel(corr, np.sqrt(beta), rng, size=draws)
        ht = np.sqrt(p) * np.sum(hu * hb, axis=1)
        assert np.var(ht) == pytest.approx(n * p * beta, rel=0.05)

    def test_energy_approximately_exponential(self):
        rng = np.random.default_rng(12)
        n, p, beta = 256, 1.0, 1.0
        draws = 100_000
        corr = identity_correlation(n)
        hu = sample_channel(corr, 1.0, rng, size=draws)
        hb = sample_channel(corr, 1.0, rng, size=draws)
        energy = np.abs(np.sqrt(p) * np.sum(hu * hb, axis=1)) ** 2
        ks = stats.kstest(energy, "expon", args=(0, n * p * beta)).statistic
        assert ks < 0.02
