import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.channel import (GeometricChannelSpec, LinkBudget, UlaGeometry,
                            draw_geometric_channel, draw_rayleigh_channel,
                            link_gain_db, noise_power_dbm, noise_power_w,
                            path_loss_db, substream, ula_steering)

BOLTZMANN = 1.380649e-23  # exact SI value, independent of scipy


class TestUlaSteering:
    def test_single_element(self):
        np.testing.assert_allclose(ula_steering(UlaGeometry(1), 0.7), [1.0])

    def test_broadside(self):
        np.testing.assert_allclose(ula_steering(UlaGeometry(4), 0.0), [0.5] * 4)

    def test_thirty_degrees(self):
        # sin(pi/6) = 1/2, so consecutive elements advance by 2*pi*0.5*0.5 = pi/2
        expected = 0.5 * np.exp(1j * np.array([0, np.pi / 2, np.pi, 3 * np.pi / 2]))
        np.testing.assert_allclose(ula_steering(UlaGeometry(4, 0.5), np.pi / 6), expected,
                                   atol=1e-15)

    def test_matrix_of_angles(self):
        angles = np.array([-0.3, 0.0, 1.1])
        A = ula_steering(UlaGeometry(6), angles)
        assert A.shape == (6, 3)
        for i, th in enumerate(angles):
            np.testing.assert_allclose(A[:, i], ula_steering(UlaGeometry(6), th))

    @given(st.integers(1, 256), st.floats(0.5, 4.0), st.floats(-10, 10))
    def test_unit_norm(self, n, spacing, angle):
        a = ula_steering(UlaGeometry(n, spacing), angle)
        assert abs(np.linalg.norm(a) - 1.0) < 1e-12

    def test_narrow_spacing_warns(self):
        with pytest.warns(UserWarning, match="below 0.5"):
            UlaGeometry(8, 0.25)

    def test_default_spacing_is_silent(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            UlaGeometry(8)

    @pytest.mark.parametrize("n", [0, -1, 2.5])
    def test_bad_element_count(self, n):
        with pytest.raises(ValueError):
            UlaGeometry(n)

    def test_non_finite_angle(self):
        with pytest.raises(ValueError):
            ula_steering(UlaGeometry(4), np.nan)


class TestGeometricChannel:
    def test_single_path_is_rank_one(self):
        spec = GeometricChannelSpec(8, 4, paths=1)
        H = draw_geometric_channel(spec, substream(3, 0, 0)).matrix
        s = np.linalg.svd(H, compute_uv=False)
        assert np.count_nonzero(s > 1e-9 * s[0]) == 1

    def test_rank_bounded_by_dimensions(self):
        spec = GeometricChannelSpec(8, 8, paths=16)
        H = draw_geometric_channel(spec, substream(3, 0, 0)).matrix
        assert np.linalg.matrix_rank(H) <= 8

    def test_shape_and_carrier(self):
        spec = GeometricChannelSpec(12, 5, paths=3, carrier_hz=60e9)
        ch = draw_geometric_channel(spec, substream(0))
        assert ch.shape == (5, 12)
        assert ch.carrier_hz == 60e9

    def test_energy_normalization(self):
        # Monte Carlo oracle of E||H||_F^2 = n_tx n_rx
        spec = GeometricChannelSpec(8, 4, paths=5)
        rng = substream(11, 0)
        energy = [np.linalg.norm(draw_geometric_channel(spec, rng).matrix) ** 2
                  for _ in range(10_000)]
        assert abs(np.mean(energy) / 32 - 1) < 0.05

    def test_seed_reproducibility(self):
        spec = GeometricChannelSpec(16, 4, paths=6)
        a = draw_geometric_channel(spec, substream(42, 7, 1)).matrix
        b = draw_geometric_channel(spec, substream(42, 7, 1)).matrix
        c = draw_geometric_channel(spec, substream(42, 7, 2)).matrix
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, c)

    def test_substream_is_order_independent(self):
        first = substream(5, 3, 0).standard_normal(4)
        for t in range(3):
            substream(5, t, 0).standard_normal(10)
        np.testing.assert_array_equal(substream(5, 3, 0).standard_normal(4), first)

    def test_invalid_spec(self):
        with pytest.raises(ValueError):
            GeometricChannelSpec(4, 4, paths=0)
        with pytest.raises(ValueError):
            GeometricChannelSpec(4, 4, paths=2, angle_domain=(1.0, -1.0))


class TestRayleigh:
    def test_shape(self):
        assert draw_rayleigh_channel(2, 2, substream(0)).shape == (2, 2)

    def test_moments(self):
        rng = substream(2024)
        x = draw_rayleigh_channel(1000, 100, rng).matrix.ravel()  # 1e5 entries
        se = 1 / np.sqrt(2 * x.size)  # per real/imag component
        assert abs(x.real.mean()) < 3 * se
        assert abs(x.imag.mean()) < 3 * se
        assert abs(np.mean(np.abs(x) ** 2) - 1) < 0.05

    def test_counts(self):
        with pytest.raises(ValueError):
            draw_rayleigh_channel(0, 2, substream(0))


class TestLinkBudget:
    def test_defaults(self):
        b = LinkBudget()
        assert (b.tx_power_w, b.cell_radius_m, b.reference_distance_m) == (5.0, 1600.0, 1600.0)
        assert (b.path_loss_exponent, b.mean_pl_at_d0_db) == (3.8, 134.0)
        assert (b.bandwidth_hz, b.carrier_hz) == (5e6, 1.8e9)
        assert (b.noise_figure_db, b.rx_antenna_gain_dbi, b.temperature_k) == (5.0, 10.3, 300.0)

    def test_path_loss_at_reference(self):
        assert path_loss_db(1600.0, LinkBudget()) == 134.0

    def test_path_loss_inside_reference(self):
        assert path_loss_db(1000.0, LinkBudget()) == pytest.approx(126.24, abs=0.01)

    def test_path_loss_one_decade_out(self):
        assert path_loss_db(16000.0, LinkBudget()) == pytest.approx(172.0, abs=1e-12)

    @pytest.mark.parametrize("d", [0.0, -5.0])
    def test_path_loss_domain(self, d):
        with pytest.raises(ValueError):
            path_loss_db(d, LinkBudget())

    @given(st.floats(1e-2, 1e6), st.floats(1.0001, 100.0))
    def test_path_loss_monotone_and_log_linear(self, d, factor):
        b = LinkBudget()
        lo, hi = path_loss_db(d, b), path_loss_db(d * factor, b)
        assert hi > lo
        assert hi - lo == pytest.approx(38.0 * math.log10(factor), rel=1e-9, abs=1e-9)

    def test_path_loss_vectorized(self):
        d = np.array([100.0, 1000.0, 1600.0])
        np.testing.assert_allclose(path_loss_db(d, LinkBudget()),
                                   [path_loss_db(x, LinkBudget()) for x in d])

    def test_noise_power(self):
        oracle = 10 * math.log10(BOLTZMANN * 300 * 5e6 / 1e-3) + 5
        assert noise_power_dbm(LinkBudget()) == pytest.approx(oracle, abs=1e-9)
        assert noise_power_dbm(LinkBudget()) == pytest.approx(-101.84, abs=0.05)

    def test_noise_power_without_figure(self):
        assert noise_power_dbm(LinkBudget(noise_figure_db=0.0)) == pytest.approx(-106.84, abs=0.05)

    def test_noise_bandwidth_doubling(self):
        delta = noise_power_dbm(LinkBudget(bandwidth_hz=10e6)) - noise_power_dbm(LinkBudget())
        assert delta == pytest.approx(10 * math.log10(2), abs=1e-12)

    def test_noise_watts(self):
        assert noise_power_w(LinkBudget()) == pytest.approx(
            10 ** ((noise_power_dbm(LinkBudget()) - 30) / 10))

    def test_link_gain(self):
        assert link_gain_db(1600.0, LinkBudget()) == pytest.approx(10.3 - 134.0)

    def test_invalid_budget(self):
        with pytest.raises(ValueError):
            LinkBudget(bandwidth_hz=0.0)
        with pytest.raises(ValueError):
            LinkBudget(tx_power_w=-1.0)
