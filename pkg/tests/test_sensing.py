import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcs.sensing import (
    QuantizedMeasurements,
    QuantizerConfig,
    SensingEnsemble,
    delta_from_bits,
    draw_ensemble,
    is_consistent,
    load_instance,
    quantize,
    rng_from_seed,
    saturation_fraction,
    save_instance,
    sense,
)


class TestQuantize:
    def test_zero(self):
        assert quantize(0.0, 1.0) == 0.5

    def test_negative(self):
        assert quantize(-0.2, 1.0) == -0.5

    def test_fractional_bin(self):
        assert quantize(1.49, 1.5) == 0.75

    def test_vectorized(self):
        np.testing.assert_array_equal(quantize(np.array([0.2, 1.7, -0.6]), 1.0),
                                      [0.5, 1.5, -0.5])

    def test_invalid_delta(self):
        with pytest.raises(ValueError):
            quantize(1.0, 0.0)
        with pytest.raises(ValueError):
            quantize(1.0, -2.0)

    @given(
        t=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        delta=st.sampled_from([0.75, 1.0, 1.5, 3.0, 6.0]),
    )
    @settings(max_examples=300, deadline=None)
    def test_cell_membership(self, t, delta):
        err = quantize(t, delta) - t
        assert -delta / 2 < err <= delta / 2


class TestDeltaFromBits:
    @pytest.mark.parametrize("bits,expected", [(1, 6.0), (2, 3.0), (3, 1.5), (4, 0.75)])
    def test_values(self, bits, expected):
        assert delta_from_bits(bits) == expected

    def test_rejects_bad_bits(self):
        with pytest.raises(ValueError):
            delta_from_bits(0)


class TestQuantizerConfig:
    def test_from_bits(self):
        cfg = QuantizerConfig.from_bits(3)
        assert cfg.delta == 1.5 and cfg.bits == 3

    def test_inconsistent_pair_rejected(self):
        with pytest.raises(ValueError):
            QuantizerConfig(delta=1.0, bits=3)

    def test_bits_range(self):
        with pytest.raises(ValueError):
            QuantizerConfig(delta=12.0, bits=0)


class TestDrawEnsemble:
    def test_gaussian_moments(self):
        ens = draw_ensemble(1000, 1, "gaussian", 1.0, 123)
        assert -0.1 <= ens.phi.mean() <= 0.1
        assert 0.85 <= ens.phi.var() <= 1.15

    def test_uniform_moments_and_support(self):
        ens = draw_ensemble(1000, 2, "uniform", 1.0, 5)
        assert np.all(np.abs(ens.phi) <= np.sqrt(3.0))
        assert 0.85 <= ens.phi.var() <= 1.15

    def test_bernoulli_support(self):
        ens = draw_ensemble(50, 20, "bernoulli", 1.0, 9)
        assert set(np.unique(ens.phi)) == {-1.0, 1.0}

    def test_dither_range_and_mean(self):
        delta = 2.0
        ens = draw_ensemble(1000, 3, "gaussian", delta, 77)
        assert np.all(np.abs(ens.dither) <= delta / 2)
        assert abs(ens.dither.mean()) <= 0.05 * delta

    def test_deterministic(self):
        a = draw_ensemble(20, 10, "gaussian", 1.5, 42)
        b = draw_ensemble(20, 10, "gaussian", 1.5, 42)
        np.testing.assert_array_equal(a.phi, b.phi)
        np.testing.assert_array_equal(a.dither, b.dither)

    def test_unknown_distribution(self):
        with pytest.raises(ValueError):
            draw_ensemble(4, 4, "cauchy", 1.0, 0)


class TestSense:
    def test_zero_signal_zero_dither(self):
        ens = SensingEnsemble(phi=np.eye(3), dist="user", dither=np.zeros(3), seed=0)
        q = sense(np.zeros(3), ens, QuantizerConfig(1.0))
        np.testing.assert_array_equal(q.q, [0.5, 0.5, 0.5])

    def test_componentwise_identity_map(self):
        ens = SensingEnsemble(phi=np.eye(3), dist="user", dither=np.zeros(3), seed=0)
        q = sense(np.array([0.2, 1.7, -0.6]), ens, QuantizerConfig(1.0))
        np.testing.assert_array_equal(q.q, [0.5, 1.5, -0.5])

    def test_requantization_is_idempotent(self):
        ens = draw_ensemble(40, 10, "gaussian", 0.75, 3)
        x = rng_from_seed(4).standard_normal(10)
        q = sense(x, ens, QuantizerConfig(0.75))
        y = ens.phi @ x + ens.dither
        np.testing.assert_array_equal(quantize(y, 0.75), q.q)
        np.testing.assert_array_equal(quantize(q.q - 1e-12, 0.75), q.q)

    def test_residual_within_half_bin(self):
        ens = draw_ensemble(64, 16, "gaussian", 1.5, 8)
        x = rng_from_seed(9).standard_normal(16)
        q = sense(x, ens, QuantizerConfig(1.5))
        assert np.max(np.abs(ens.phi @ x + ens.dither - q.q)) <= 0.75

    def test_dimension_mismatch(self):
        ens = draw_ensemble(5, 4, "gaussian", 1.0, 1)
        with pytest.raises(ValueError):
            sense(np.zeros(3), ens, QuantizerConfig(1.0))


class TestConsistency:
    def test_sensed_signal_is_consistent(self):
        for seed in range(5):
            ens = draw_ensemble(30, 8, "gaussian", 0.75, seed)
            x = rng_from_seed(seed + 100).standard_normal(8) * 0.3
            q = sense(x, ens, QuantizerConfig(0.75))
            assert is_consistent(x, q, ens, QuantizerConfig(0.75), tol=0.0)

    def test_box_violation_detected(self):
        delta = 1.0
        ens = SensingEnsemble(phi=np.eye(2), dist="user", dither=np.zeros(2), seed=0)
        q = QuantizedMeasurements(q=np.array([0.5, 0.5]), delta=delta)
        u = np.array([0.5 + 0.51, 0.5])  # residual 0.51 * delta in one entry
        assert not is_consistent(u, q, ens, QuantizerConfig(delta), tol=0.0)
        assert is_consistent(u, q, ens, QuantizerConfig(delta), tol=0.02 * delta)


class TestSaturation:
    def test_all_central(self):
        q = QuantizedMeasurements(q=np.array([0.5, -0.5, 0.5]), delta=1.0)
        assert saturation_fraction(q) == 0.0

    def test_quarter(self):
        q = QuantizedMeasurements(q=np.array([0.5, 1.5, -0.5, -0.5]), delta=1.0)
        assert saturation_fraction(q) == 0.25

    def test_one_bit_regime_monte_carlo(self):
        # B=1 (delta=6), unit-norm signal: essentially all measurements
        # land in the two central bins
        delta = delta_from_bits(1)
        n = 16
        x = np.ones(n) / np.sqrt(n)
        ens = draw_ensemble(10_000, n, "gaussian", delta, 0)
        q = sense(x, ens, QuantizerConfig(delta))
        assert saturation_fraction(q) <= 0.008


class TestNoiseModel:
    def test_quantization_noise_is_uniform(self):
        delta = 1.0
        m = 100_000
        ens = draw_ensemble(m, 4, "gaussian", delta, 2024)
        x = rng_from_seed(77).standard_normal(4) * 0.5
        q = sense(x, ens, QuantizerConfig(delta))
        noise = q.q - (ens.phi @ x + ens.dither)
        assert abs(noise.mean()) <= 0.01 * delta
        assert 0.95 * delta**2 / 12 <= noise.var() <= 1.05 * delta**2 / 12


class TestQuantizedMeasurements:
    def test_lattice_validation(self):
        QuantizedMeasurements(q=np.array([0.75 * 0.5, 0.75 * 2.5]), delta=0.75)
        with pytest.raises(ValueError):
            QuantizedMeasurements(q=np.array([0.3]), delta=1.0)

    def test_positive_delta(self):
        with pytest.raises(ValueError):
            QuantizedMeasurements(q=np.array([0.5]), delta=-1.0)


class TestInstanceIO:
    def test_round_trip(self, tmp_path):
        ens = draw_ensemble(12, 5, "bernoulli", 1.5, 31)
        x = rng_from_seed(32).standard_normal(5) * 0.4
        q = sense(x, ens, QuantizerConfig(1.5))
        path = tmp_path / "instance.json"
        save_instance(path, ens, q)
        ens2, q2 = load_instance(path)
        np.testing.assert_array_equal(ens.phi, ens2.phi)
        np.testing.assert_array_equal(ens.dither, ens2.dither)
        np.testing.assert_array_equal(q.q, q2.q)
        assert (ens.dist, ens.seed, q.delta) == (ens2.dist, ens2.seed, q2.delta)

    def test_field_order(self, tmp_path):
        ens = draw_ensemble(3, 2, "gaussian", 1.0, 1)
        q = sense(np.zeros(2), ens, QuantizerConfig(1.0))
        path = tmp_path / "instance.json"
        save_instance(path, ens, q)
        keys = list(json.loads(path.read_text()).keys())
        assert keys == ["m", "n", "dist", "delta", "seed", "phi", "xi", "q"]
