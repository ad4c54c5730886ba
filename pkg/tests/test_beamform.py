import numpy as np
import pytest

from spherecue import beamform
from spherecue.beamform import (
    DegenerateSteeringError,
    SteeringField,
    directivity,
    make_grid,
    matched_weights,
    wng,
)


class TestMatchedWeights:
    def test_equal_channels(self):
        w = matched_weights(np.array([1.0, 1.0]))
        assert np.allclose(w, [0.5, 0.5])

    def test_single_channel(self):
        w = matched_weights(np.array([2.0, 0.0]))
        assert np.allclose(w, [0.5, 0.0])

    def test_distortionless_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            h0 = rng.normal(size=2) + 1j * rng.normal(size=2)
            w = matched_weights(h0)
            assert abs(np.vdot(w, h0) - 1.0) < 1e-14

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateSteeringError):
            matched_weights(np.zeros(2, dtype=complex))


class TestWng:
    def test_equal_weights_value(self):
        assert wng(np.array([0.5, 0.5])) == pytest.approx(10 * np.log10(2.0), abs=1e-12)

    def test_matched_filter_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            h0 = rng.normal(size=2) + 1j * rng.normal(size=2)
            w = matched_weights(h0)
            expected = 10 * np.log10(np.real(np.vdot(h0, h0)))
            assert wng(w) == pytest.approx(expected, abs=1e-12)


class TestGrid:
    def test_targets_snap(self):
        assert len(make_grid(12).directions) == 12
        assert len(make_grid(162).directions) == 162
        with pytest.warns(UserWarning):
            g = make_grid(100)
        assert len(g.directions) in (42, 162)

    def test_rejects_tiny(self):
        with pytest.raises(ValueError):
            make_grid(5)

    def test_weights_sum_to_sphere(self):
        for n in (12, 42, 162, 642):
            g = make_grid(n)
            assert np.all(g.weights > 0)
            assert np.sum(g.weights) == pytest.approx(4 * np.pi, abs=1e-10)

    def test_degree_one_harmonic_integrates_to_zero(self):
        g = make_grid(162)
        y10 = np.sqrt(3 / (4 * np.pi)) * np.cos(g.directions[:, 0])
        assert abs(np.sum(g.weights * y10)) < 1e-6


class TestDirectivity:
    def test_uniform_field_gives_unity(self):
        grid = make_grid(42)

        class Flat:
            freqs = np.array([1000.0])
            H = np.ones((42, 1, 2), dtype=complex)

            def steering(self, direction):
                return np.ones((1, 2), dtype=complex)

        df, di = directivity(matched_weights(np.ones(2, dtype=complex)),
                             1000.0, Flat(), grid, (1.0, 1.0))
        assert df == pytest.approx(1.0, abs=1e-12)
        assert di == pytest.approx(0.0, abs=1e-12)

    def test_scale_invariance(self, scene_small):
        grid = make_grid(42)
        field = SteeringField(scene_small, grid)
        look = (1.2, 0.7)
        f = float(field.freqs[2])
        h0 = field.steering(look)[2]
        w = matched_weights(h0)
        df1, _ = directivity(w, f, field, grid, look)

        class Scaled:
            freqs = field.freqs
            H = 3.0 * field.H

            def steering(self, direction):
                return 3.0 * field.steering(direction)

        h0s = Scaled().steering(look)[2]
        df2, _ = directivity(matched_weights(h0s), f, Scaled(), grid, look)
        assert df1 == pytest.approx(df2, rel=1e-10)

    def test_band_metrics_positive_wng(self, scene_default):
        grid = make_grid(42)
        freqs, wng_db, df, di_db = beamform.band_metrics(scene_default, (2.1293, 1.0996), grid)
        assert np.all(np.isfinite(wng_db))
        assert np.all(wng_db > 0)
        assert np.all(df > 0)
