import numpy as np
import pytest
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from core.bands import make_vol_band
from core.utils import loglog_slope

from .ensembles import sample_paths
from .quadvar import moment_estimate, qv_approx_error, qv_sweep
from .schemes import ConstVol, IncrementLaw

BAND = make_vol_band(0.1, 0.2, 1.0)


class QVApproximationTests(SimpleTestCase):
    def test_full_resolution_is_exact_for_binomial(self):
        estimate = qv_approx_error(
            BAND, 1.0, 64, n_paths=200, seed=3,
            battery=[ConstVol(0.2, IncrementLaw.BINOMIAL)], fine_steps=64)
        self.assertEqual(estimate.value, 0.0)
        self.assertTrue(estimate.within_bound)
        self.assertEqual(estimate.bound, pytest.approx(4 * 0.04 * (1 / 64) * 0.04))

    def test_resolution_errors(self):
        for n in (3, 2048, 0):
            with self.subTest(n=n):
                with self.assertRaises(ValidationError) as context:
                    qv_approx_error(BAND, 1.0, n, n_paths=10, seed=1, fine_steps=1024)
                self.assertEqual(context.exception.code, 'resolution')

    def test_time_out_of_range(self):
        with self.assertRaises(ValidationError) as context:
            qv_approx_error(BAND, 1.5, 4, n_paths=10, seed=1, fine_steps=16)
        self.assertEqual(context.exception.code, 'range')

    def test_sweep_rate_and_bound(self):
        sweep = qv_sweep(BAND, 1.0, (4, 8, 16, 32, 64), n_paths=1000, seed=2024, fine_steps=1024)
        self.assertAlmostEqual(sweep.slope, -1.0, delta=0.2)
        self.assertTrue(sweep.all_within_bound)
        values = [estimate.value for estimate in sweep.estimates]
        self.assertEqual(values, sorted(values, reverse=True))
        report = sweep.as_dict()
        self.assertEqual([e['subdivisions'] for e in report['estimates']], [4, 8, 16, 32, 64])
        self.assertEqual(len(report['estimates'][0]['per_scheme']), 6)


class MomentTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.ensemble = sample_paths(BAND, ConstVol(0.2, IncrementLaw.GAUSSIAN), 40000, 4, seed=17)

    def test_second_and_fourth_moment(self):
        second = moment_estimate(self.ensemble, 1, 0.0, 1.0)
        self.assertLessEqual(abs(second.value - 0.04), 3 * second.stderr)
        fourth = moment_estimate(self.ensemble, 2, 0.0, 1.0)
        self.assertLessEqual(abs(fourth.value - 3 * 0.04 ** 2), 3 * fourth.stderr)

    def test_empty_interval(self):
        estimate = moment_estimate(self.ensemble, 3, 0.5, 0.5)
        self.assertEqual((estimate.value, estimate.stderr), (0.0, 0.0))

    def test_invalid_arguments(self):
        with self.assertRaises(ValidationError):
            moment_estimate(self.ensemble, 4, 0.0, 1.0)
        with self.assertRaises(ValidationError):
            moment_estimate(self.ensemble, 1, 0.75, 0.25)
        with self.assertRaises(ValidationError) as context:
            moment_estimate(self.ensemble, 1, 0.0, 0.3)
        self.assertEqual(context.exception.code, 'alignment')

    def test_scaling_in_band_increment(self):
        lengths = (0.25, 0.5, 1.0)
        for n in (1, 2):
            moments = [moment_estimate(self.ensemble, n, 0.0, t).value for t in lengths]
            slope, _stderr = loglog_slope([0.04 * t for t in lengths], moments)
            with self.subTest(n=n):
                self.assertAlmostEqual(slope, n, delta=0.15)


def test_estimates_are_reproducible():
    first = qv_approx_error(BAND, 0.5, 8, n_paths=50, seed=5, fine_steps=64)
    second = qv_approx_error(BAND, 0.5, 8, n_paths=50, seed=5, fine_steps=64)
    assert first.as_dict() == second.as_dict()
    assert np.isfinite(first.value)
