import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsim.beamforming import (DegenerateChannelError, DigitalPrecoder,
                                HybridPrecoder, InfeasibleError, PowerAllocation,
                                StreamReductionError, bd_precoder, hybrid_precoder,
                                leakage_ratios, mrt_precoder, sum_rate, svd_precoder,
                                two_phase_factorization, waterfill, zf_precoder)
from hetsim.channel import GeometricChannelSpec, draw_geometric_channel, substream


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def rate_oracle(H, W, noise, interferers=()):
    """log2 det(I + Q^-1 S) by explicit inverse and determinant."""
    S = H @ W @ W.conj().T @ H.conj().T
    Q = noise * np.eye(H.shape[0]) + sum((H @ V @ V.conj().T @ H.conj().T for V in interferers),
                                         np.zeros((H.shape[0],) * 2, complex))
    return float(np.log2(np.linalg.det(np.eye(H.shape[0]) + np.linalg.inv(Q) @ S).real))


def simplex_grid(n, points=1000):
    """Integer compositions of ``steps`` into ``n`` parts, about ``points`` of them."""
    steps = {1: 1, 2: 999, 3: 43, 4: 17}[n]
    for combo in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(combo) <= steps:
            yield np.array(combo + (steps - sum(combo),), float) / steps


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class TestWaterfill:
    def test_single_channel(self):
        np.testing.assert_allclose(waterfill([3.0], 2.5).per_stream_powers_w, [2.5])

    def test_symmetric(self):
        np.testing.assert_allclose(waterfill([2.0, 2.0], 3.0).per_stream_powers_w, [1.5, 1.5])

    def test_weak_channel_switched_off(self):
        p = waterfill([10.0, 0.01], 1.0).per_stream_powers_w
        np.testing.assert_allclose(p, [1.0, 0.0])
        rate = np.sum(np.log2(1 + np.array([10.0, 0.01]) * p))
        for x in np.linspace(0, 1, 1001):
            assert rate >= np.log2(1 + 10 * x) + np.log2(1 + 0.01 * (1 - x)) - 1e-12

    def test_zero_gain_gets_nothing(self):
        p = waterfill([0.0, 1.0, 4.0], 1.0).per_stream_powers_w
        assert p[0] == 0.0
        assert p.sum() == pytest.approx(1.0)

    def test_all_zero_gains(self):
        with pytest.raises(InfeasibleError):
            waterfill([0.0, 0.0], 1.0)

    def test_zero_power(self):
        np.testing.assert_array_equal(waterfill([1.0, 2.0], 0.0).per_stream_powers_w, [0, 0])

    def test_negative_gain(self):
        with pytest.raises(ValueError):
            waterfill([-1.0, 2.0], 1.0)

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_grid_optimality(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            g = rng.exponential(size=n) * 10 ** rng.uniform(-1, 1)
            P = 10 ** rng.uniform(-1, 1)
            p = waterfill(g, P).per_stream_powers_w
            best = np.sum(np.log2(1 + g * p))
            grid = max(np.sum(np.log2(1 + g * P * x)) for x in simplex_grid(n))
            assert best >= grid - 1e-9

    @given(st.lists(st.floats(0, 1e3), min_size=1, max_size=8), st.floats(1e-3, 1e3))
    def test_feasibility(self, gains, power):
        if not any(g > 0 for g in gains):
            return
        alloc = waterfill(gains, power)
        p = alloc.per_stream_powers_w
        assert np.all(p >= 0)
        assert p.sum() <= power * (1 + 1e-9)
        assert p.sum() == pytest.approx(power, rel=1e-9)


class TestPowerAllocation:
    def test_over_budget(self):
        with pytest.raises(ValueError):
            PowerAllocation([0.6, 0.6], 1.0)

    def test_negative(self):
        with pytest.raises(ValueError):
            PowerAllocation([-0.1, 0.5], 1.0)

    def test_split(self):
        parts = PowerAllocation([1, 2, 3], 6).split([2, 1])
        np.testing.assert_array_equal(parts[0], [1, 2])
        np.testing.assert_array_equal(parts[1], [3])


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class TestMrt:
    def test_unit_vector(self):
        w = mrt_precoder(np.array([1.0, 0, 0]), 1.0).per_user_matrices[0]
        np.testing.assert_allclose(w[:, 0], [1, 0, 0])

    def test_conjugate_and_scale(self):
        w = mrt_precoder(np.array([1.0, 1j]), 2.0).per_user_matrices[0]
        np.testing.assert_allclose(w[:, 0], [1, -1j], atol=1e-15)

    def test_maximizes_received_power(self):
        rng = np.random.default_rng(0)
        h = crandn(rng, 8)
        w = mrt_precoder(h, 1.0).per_user_matrices[0][:, 0]
        best = abs(h @ w) ** 2
        for _ in range(1000):
            v = crandn(rng, 8)
            v /= np.linalg.norm(v)
            assert abs(h @ v) ** 2 <= best * (1 + 1e-12)

    def test_multi_antenna_power(self):
        rng = np.random.default_rng(1)
        H = crandn(rng, 3, 6)
        pre = mrt_precoder(H, 4.0)
        W = np.hstack(pre.per_user_matrices)
        np.testing.assert_allclose(W, 2.0 * H.conj().T / np.linalg.norm(H), atol=1e-14)
        assert pre.transmit_power() == pytest.approx(4.0)

    def test_zero_channel(self):
        with pytest.raises(DegenerateChannelError):
            mrt_precoder(np.zeros(4), 1.0)


class TestZf:
    def test_identity(self):
        W = np.hstack(zf_precoder(np.eye(3), 3.0).per_user_matrices)
        np.testing.assert_allclose(W, np.eye(3), atol=1e-15)

    def test_diagonalizes(self):
        rng = np.random.default_rng(2)
        for K, n in [(2, 4), (4, 4), (3, 8)]:
            H = crandn(rng, K, n)
            HW = H @ np.hstack(zf_precoder(H, 1.0).per_user_matrices)
            off = HW - np.diag(np.diag(HW))
            assert np.abs(off).max() <= 1e-10 * np.abs(np.diag(HW)).max()

    def test_no_interference_term(self):
        rng = np.random.default_rng(3)
        H = crandn(rng, 2, 4)
        pre = zf_precoder(H, 2.0)
        Ws = pre.per_user_matrices
        for k in range(2):
            interference = sum(abs(H[k] @ Ws[j][:, 0]) ** 2 for j in range(2) if j != k)
            assert interference < 1e-25
        assert pre.transmit_power() == pytest.approx(2.0)

    def test_too_many_users(self):
        with pytest.raises(InfeasibleError):
            zf_precoder(np.ones((3, 2)), 1.0)

    def test_rank_deficient(self):
        with pytest.raises(InfeasibleError):
            zf_precoder(np.array([[1, 2, 3], [2, 4, 6]], complex), 1.0)


class TestSvd:
    def test_diagonal_channel(self):
        pre, comb, alloc = svd_precoder(np.diag([2.0, 1.0]), 1.0, 1.0)
        np.testing.assert_allclose(np.abs(pre.beams[0]), np.eye(2), atol=1e-15)
        np.testing.assert_allclose(np.abs(comb), np.eye(2), atol=1e-15)
        p = alloc.per_stream_powers_w
        assert p[0] >= p[1]
        # mu = (1 + 1/4 + 1) / 2
        np.testing.assert_allclose(p, [0.875, 0.125])

    def test_rank_one(self):
        rng = np.random.default_rng(4)
        H = np.outer(crandn(rng, 4), crandn(rng, 6))
        pre, comb, alloc = svd_precoder(H, 3.0, 0.5)
        assert pre.streams == [1]
        np.testing.assert_allclose(alloc.per_stream_powers_w, [3.0])

    def test_rate_formula(self):
        rng = np.random.default_rng(5)
        H = crandn(rng, 3, 5)
        pre, comb, alloc = svd_precoder(H, 2.0, 0.3)
        s = np.linalg.svd(H, compute_uv=False)
        expected = np.sum(np.log2(1 + alloc.per_stream_powers_w * s ** 2 / 0.3))
        assert sum_rate([H], pre, 0.3).sum_bits_per_s_per_hz == pytest.approx(expected, rel=1e-12)
        assert sum_rate([H], pre, 0.3, combiners=[comb]).sum_bits_per_s_per_hz == pytest.approx(
            expected, rel=1e-12)

    def test_beats_random_precoders(self):
        rng = np.random.default_rng(6)
        H = crandn(rng, 4, 8)
        P, noise = 2.0, 0.5
        pre, _, _ = svd_precoder(H, P, noise)
        best = sum_rate([H], pre, noise).sum_bits_per_s_per_hz
        for _ in range(1000):
            W = crandn(rng, 8, 4)
            W *= np.sqrt(P) / np.linalg.norm(W)
            assert rate_oracle(H, W, noise) <= best + 1e-9

    def test_beats_isotropic(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            H = crandn(rng, 3, 6)
            pre, _, _ = svd_precoder(H, 1.5, 0.2)
            iso = rate_oracle(H, np.sqrt(1.5 / 6) * np.eye(6), 0.2)
            assert sum_rate([H], pre, 0.2).sum_bits_per_s_per_hz >= iso - 1e-9

    def test_zero_channel(self):
        with pytest.raises(DegenerateChannelError):
            svd_precoder(np.zeros((2, 3)), 1.0, 1.0)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class TestBlockDiagonalization:
    def test_orthogonal_users_decouple(self):
        rng = np.random.default_rng(8)
        Q, _ = np.linalg.qr(crandn(rng, 4, 4))
        H1, H2 = Q[:2].conj() * 1.7, Q[2:].conj() * 0.6
        pre, alloc = bd_precoder([H1, H2], 2, 2.0, 0.1)
        for H, W in zip((H1, H2), pre.beams):
            # beams span the user's own row space
            proj = H.conj().T @ np.linalg.pinv(H.conj().T)
            np.testing.assert_allclose(proj @ W, W, atol=1e-12)
        # no nulling loss: equals single-user SVD with the same per-user power
        for k, H in enumerate((H1, H2)):
            su, _, _ = svd_precoder(H, 1.0, 0.1)
            assert sum_rate([H1, H2], pre, 0.1).per_user_bits_per_s_per_hz[k] == pytest.approx(
                sum_rate([H], su, 0.1).sum_bits_per_s_per_hz, rel=1e-10)

    def test_empty_null_space(self):
        rng = np.random.default_rng(9)
        with pytest.raises(InfeasibleError, match="user 0"):
            bd_precoder([crandn(rng, 2, 2), crandn(rng, 2, 2)], 2, 1.0, 1.0)

    def test_leakage(self):
        rng = np.random.default_rng(10)
        Hs = [crandn(rng, 2, 16) for _ in range(4)]
        pre, _ = bd_precoder(Hs, 2, 1.0, 1.0)
        assert leakage_ratios(Hs, pre.beams).max() < 1e-10

    def test_power(self):
        rng = np.random.default_rng(11)
        Hs = [crandn(rng, 2, 10) for _ in range(3)]
        pre, alloc = bd_precoder(Hs, [2, 1, 2], 6.0, 0.5)
        assert pre.streams == [2, 1, 2]
        assert pre.transmit_power() <= 6.0 * (1 + 1e-9)
        for p in alloc.split(pre.streams):
            assert p.sum() == pytest.approx(2.0)

    def test_sum_rate_equals_per_user_single_user_rates(self):
        rng = np.random.default_rng(12)
        Hs = [crandn(rng, 2, 8) for _ in range(2)]
        pre, _ = bd_precoder(Hs, 2, 4.0, 0.2)
        rep = sum_rate(Hs, pre, 0.2)
        Ws = pre.per_user_matrices
        independent = sum(rate_oracle(H, W, 0.2) for H, W in zip(Hs, Ws))
        assert rep.sum_bits_per_s_per_hz == pytest.approx(independent, rel=1e-9)

    def test_stream_reduction_recorded(self):
        rng = np.random.default_rng(13)
        H1 = np.outer(crandn(rng, 3), crandn(rng, 8))  # rank one
        H2 = crandn(rng, 2, 8)
        pre, _ = bd_precoder([H1, H2], [2, 2], 1.0, 1.0)
        assert pre.stream_reductions == ((0, 2, 1),)
        assert sum_rate([H1, H2], pre, 1.0).stream_reductions == ((0, 2, 1),)
        with pytest.raises(StreamReductionError):
            bd_precoder([H1, H2], [2, 2], 1.0, 1.0, reduce_streams=False)

    def test_too_many_streams(self):
        rng = np.random.default_rng(14)
        with pytest.raises(InfeasibleError, match="user 1"):
            bd_precoder([crandn(rng, 2, 5), crandn(rng, 3, 5)], [1, 4], 1.0, 1.0)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
def geometric_users(seed, K, n_tx, n_rx, L):
    spec = GeometricChannelSpec(n_tx, n_rx, L)
    return [draw_geometric_channel(spec, substream(seed, 0, k)).matrix for k in range(K)]


class TestHybrid:
    def test_two_phase_factorization_exact(self):
        rng = np.random.default_rng(15)
        W = crandn(rng, 10, 3)
        W[:, 1] = 0
        F, D = two_phase_factorization(W)
        assert F.shape == (10, 6)
        np.testing.assert_allclose(np.abs(F), 1.0, atol=1e-15)
        np.testing.assert_allclose(F @ D, W, atol=1e-13)

    def test_single_path_matches_mrt(self):
        for seed in range(5):
            H = geometric_users(seed, 1, 16, 4, 1)[0]
            hy = hybrid_precoder([H], 1, 1, 2.0, 0.5)
            mrt = mrt_precoder(H, 2.0)
            r_h = sum_rate([H], hy, 0.5).sum_bits_per_s_per_hz
            r_m = sum_rate([H], mrt, 0.5).sum_bits_per_s_per_hz
            assert r_h == pytest.approx(r_m, rel=1e-9)

    def test_full_rf_chains_match_digital(self):
        rng = np.random.default_rng(16)
        H = crandn(rng, 4, 8)
        hy = hybrid_precoder([H], 8, 4, 1.0, 0.1)
        dig, _, _ = svd_precoder(H, 1.0, 0.1, max_streams=4)
        assert sum_rate([H], hy, 0.1).sum_bits_per_s_per_hz == pytest.approx(
            sum_rate([H], dig, 0.1).sum_bits_per_s_per_hz, rel=1e-6)

    def test_unit_modulus_and_power(self):
        Hs = geometric_users(1, 4, 32, 8, 16)
        for n_rf, n_rf_rx in [(16, 4), (12, 3), (8, 2)]:
            hy = hybrid_precoder(Hs, n_rf, 2, 10.0, 1.0, n_rf_rx=n_rf_rx)
            assert isinstance(hy, HybridPrecoder)
            assert hy.n_rf == n_rf
            np.testing.assert_allclose(np.abs(hy.analog_matrix), 1.0, atol=1e-12)
            for R in hy.rx_analog:
                assert R.shape == (8, n_rf_rx)
                np.testing.assert_allclose(np.abs(R), 1.0, atol=1e-12)
            assert hy.transmit_power() <= 10.0 * (1 + 1e-9)

    def test_desk_scale_matches_digital(self):
        for seed in range(5):
            Hs = geometric_users(seed, 4, 32, 8, 16)
            for snr_db in (0, 10, 20):
                P = 10 ** (snr_db / 10)
                dig, _ = bd_precoder(Hs, 2, P, 1.0)
                hy = hybrid_precoder(Hs, 16, 2, P, 1.0, n_rf_rx=4)
                r_d = sum_rate(Hs, dig, 1.0).sum_bits_per_s_per_hz
                r_h = sum_rate(Hs, hy, 1.0, combiners=hy.combiners).sum_bits_per_s_per_hz
                assert 0.95 <= r_h / r_d <= 1 + 1e-9

    def test_single_user_never_beats_digital(self):
        # SVD with water-filling is capacity achieving, so any hybrid is below it
        rng = np.random.default_rng(17)
        for _ in range(20):
            H = crandn(rng, 4, 12)
            for n_rf in (2, 3, 4, 8):
                hy = hybrid_precoder([H], n_rf, 2, 1.0, 0.5)
                dig, _, _ = svd_precoder(H, 1.0, 0.5, max_streams=2)
                assert (sum_rate([H], hy, 0.5).sum_bits_per_s_per_hz
                        <= sum_rate([H], dig, 0.5).sum_bits_per_s_per_hz * (1 + 1e-9))

    def test_not_enough_rf_chains(self):
        Hs = geometric_users(2, 4, 32, 8, 16)
        with pytest.raises(InfeasibleError, match="total number of streams"):
            hybrid_precoder(Hs, 7, 2, 1.0, 1.0)
        with pytest.raises(InfeasibleError):
            hybrid_precoder(Hs, 33, 2, 1.0, 1.0)
        with pytest.raises(InfeasibleError):
            hybrid_precoder(Hs, 16, 2, 1.0, 1.0, n_rf_rx=1)


# xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx
class TestSumRate:
    def test_scalar_unit_snr(self):
        assert sum_rate([np.array([[1.0]])], [np.array([[1.0]])], 1.0).sum_bits_per_s_per_hz == 1.0

    def test_scalar_snr_three(self):
        rep = sum_rate([np.array([[1.0]])], [np.array([[np.sqrt(3.0)]])], 1.0, bandwidth_hz=5e6)
        assert rep.sum_bits_per_s_per_hz == pytest.approx(2.0, rel=1e-12)
        assert rep.sum_bits_per_s == pytest.approx(10e6)

    def test_powers_applied_to_beams(self):
        rep = sum_rate([np.array([[1.0]])], [np.array([[1.0]])], 1.0,
                       powers=PowerAllocation([3.0], 3.0))
        assert rep.sum_bits_per_s_per_hz == pytest.approx(2.0)

    def test_matches_oracle_with_interference(self):
        rng = np.random.default_rng(18)
        Hs = [crandn(rng, 2, 4) for _ in range(3)]
        Ws = [crandn(rng, 4, 2) for _ in range(3)]
        rep = sum_rate(Hs, Ws, 0.7)
        for k in range(3):
            others = [Ws[j] for j in range(3) if j != k]
            assert rep.per_user_bits_per_s_per_hz[k] == pytest.approx(
                rate_oracle(Hs[k], Ws[k], 0.7, others), rel=1e-10)
        assert rep.sum_bits_per_s_per_hz == pytest.approx(rep.per_user_bits_per_s_per_hz.sum(),
                                                          rel=1e-12)

    def test_combiner_noise_colouring(self):
        # a non-orthonormal combiner must not change a single-stream SNR
        H = np.array([[1.0, 0.0], [0.0, 0.0]])
        W = np.array([[1.0], [0.0]])
        C = np.array([[2.0], [0.0]])
        assert sum_rate([H], [W], 1.0, combiners=[C]).sum_bits_per_s_per_hz == pytest.approx(1.0)

    def test_monotone_in_power(self):
        rng = np.random.default_rng(19)
        Hs = [crandn(rng, 2, 8) for _ in range(3)]
        dig, _ = bd_precoder(Hs, 2, 1.0, 1.0)
        prev = -1.0
        for P in (0.0, 0.1, 1.0, 10.0, 100.0):
            scaled = DigitalPrecoder(dig.beams, PowerAllocation(
                dig.powers.per_stream_powers_w * P, P))
            r = sum_rate(Hs, scaled, 1.0).sum_bits_per_s_per_hz
            assert r >= prev
            prev = r

    @settings(max_examples=25, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(0, 10_000))
    def test_scale_covariance(self, c, seed):
        rng = np.random.default_rng(seed)
        Hs = [crandn(rng, 2, 8) for _ in range(3)]
        a, _ = bd_precoder(Hs, 2, 2.0, 0.5)
        b, _ = bd_precoder(Hs, 2, 2.0 * c, 0.5 * c)
        ra = sum_rate(Hs, a, 0.5).per_user_bits_per_s_per_hz
        rb = sum_rate(Hs, b, 0.5 * c).per_user_bits_per_s_per_hz
        np.testing.assert_allclose(rb, ra, rtol=1e-9)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            sum_rate([np.ones((1, 3))], [np.ones((2, 1))], 1.0)
        with pytest.raises(ValueError):
            sum_rate([np.ones((1, 3))], [np.ones((3, 1)), np.ones((3, 1))], 1.0)

    def test_noise_must_be_positive(self):
        with pytest.raises(ValueError):
            sum_rate([np.ones((1, 1))], [np.ones((1, 1))], 0.0)
