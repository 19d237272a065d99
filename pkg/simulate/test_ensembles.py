import io

import numpy as np
import pytest
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings

from core.bands import make_knot_band, make_vol_band
from core.expressions import parse_expression
from core.payoffs import Terminal
from lattice.grids import build_lattice
from lattice.pricing import price_upper

from .ensembles import ensemble_from_csv, ensemble_to_csv, sample_paths
from .quadvar import qv_containment, realized_qv, realized_qv_matrix, variance_containment
from .schemes import (
    ConstVol, DeterministicProfile, IncrementLaw, PiecewiseRandom, PolicyFeedback, default_battery,
)

BAND = make_vol_band(0.1, 0.2, 1.0)
BINOMIAL, GAUSSIAN, TRINOMIAL = IncrementLaw.BINOMIAL, IncrementLaw.GAUSSIAN, IncrementLaw.TRINOMIAL


class SamplePathsTests(SimpleTestCase):
    def test_binomial_bracket_is_exact(self):
        ensemble = sample_paths(BAND, ConstVol(0.2, BINOMIAL), 500, 4, seed=1)
        np.testing.assert_allclose(realized_qv_matrix(ensemble)[:, -1], 0.04, rtol=1e-12)
        self.assertEqual(realized_qv(ensemble, 17).terminal, pytest.approx(0.04, rel=1e-12))
        self.assertTrue(np.all(ensemble.B[:, 0] == 0))

    def test_band_violation(self):
        with self.assertRaises(ValidationError) as context:
            sample_paths(BAND, ConstVol(0.25, BINOMIAL), 10, 4, seed=1)
        self.assertEqual(context.exception.code, 'band-violation')
        with self.assertRaises(ValidationError) as context:
            sample_paths(BAND, DeterministicProfile(variances=(0.01, 0.01, 0.02, 0.01)), 10, 4, seed=1)
        self.assertEqual(context.exception.code, 'band-violation')

    def test_profile_shape(self):
        with self.assertRaises(ValidationError) as context:
            sample_paths(BAND, DeterministicProfile(variances=(0.01, 0.01)), 10, 4, seed=1)
        self.assertEqual(context.exception.code, 'shape')

    def test_reproducible(self):
        for scheme in default_battery(BAND, GAUSSIAN):
            with self.subTest(scheme=scheme.name):
                first = sample_paths(BAND, scheme, 300, 16, seed=2024)
                second = sample_paths(BAND, scheme, 300, 16, seed=2024)
                self.assertTrue(np.array_equal(first.B, second.B))
                self.assertTrue(np.array_equal(first.v, second.v))
                other = sample_paths(BAND, scheme, 300, 16, seed=2025)
                self.assertFalse(np.array_equal(first.B, other.B))

    @override_settings(SIMULATION_BLOCK_SIZE=64)
    def test_blocks_are_substreams(self):
        scheme = PiecewiseRandom(4, 0.3, GAUSSIAN)
        small = sample_paths(BAND, scheme, 100, 8, seed=9)
        large = sample_paths(BAND, scheme, 200, 8, seed=9)
        self.assertTrue(np.array_equal(small.B[:64], large.B[:64]))
        self.assertIn('block=64', small.generator)

    def test_band_containment(self):
        knot_band = make_knot_band([(0, 0), (0.5, 0.002), (1, 0.01)], [(0, 0), (0.5, 0.03), (1, 0.04)])
        for band in (BAND, knot_band):
            for scheme in default_battery(band, BINOMIAL):
                with self.subTest(scheme=scheme.name):
                    ensemble = sample_paths(band, scheme, 400, 40, seed=5)
                    self.assertEqual(variance_containment(ensemble, band), 0)
                    self.assertEqual(qv_containment(ensemble, band)['violations'], 0)

    def test_zero_variance_profile(self):
        band = make_vol_band(0, 0.2, 1.0)
        ensemble = sample_paths(band, DeterministicProfile(weight=0.0, law=BINOMIAL), 50, 10, seed=3)
        self.assertTrue(np.all(realized_qv_matrix(ensemble) == 0))

    def test_gaussian_bracket_mean(self):
        ensemble = sample_paths(BAND, ConstVol(0.2, GAUSSIAN), 20000, 4, seed=11)
        terminal = realized_qv_matrix(ensemble)[:, -1]
        se = terminal.std(ddof=1) / np.sqrt(terminal.size)
        self.assertLessEqual(abs(terminal.mean() - 0.04), 3 * se)

    def test_trinomial_law(self):
        spec = build_lattice(BAND, 20)
        ensemble = sample_paths(BAND, ConstVol(0.1, TRINOMIAL), 4000, 20, seed=4)
        steps = np.unique(np.round(ensemble.increments / spec.dx, 9))
        self.assertTrue(set(steps.tolist()) <= {-1.0, 0.0, 1.0})
        squares = np.square(ensemble.increments).sum(axis=1)
        se = squares.std(ddof=1) / np.sqrt(squares.size)
        self.assertLessEqual(abs(squares.mean() - 0.01), 3 * se)


class MartingaleTests(SimpleTestCase):
    def test_conditional_increments_are_centered(self):
        spec = build_lattice(BAND, 20)
        policy = price_upper(spec, Terminal(parse_expression("max(x+0.1,0) - 2*max(x,0) + max(x-0.1,0)")))[2]
        for scheme in default_battery(BAND, GAUSSIAN, policy=policy, spec=spec):
            ensemble = sample_paths(BAND, scheme, 20000, 20, seed=77)
            for i in (1, 10, 19):
                for bucket in (ensemble.B[:, i] > 0, ensemble.B[:, i] <= 0):
                    increments = ensemble.increments[bucket, i]
                    if increments.size < 2:
                        continue
                    se = increments.std(ddof=1) / np.sqrt(increments.size)
                    with self.subTest(scheme=scheme.name, knot=i):
                        self.assertLessEqual(abs(increments.mean()), 4 * se + 1e-15)


class PolicyFeedbackTests(SimpleTestCase):
    def test_all_high_policy_matches_upper_endpoint(self):
        spec = build_lattice(BAND, 40)
        policy = price_upper(spec, Terminal(parse_expression("max(x, 0)")))[2]
        self.assertTrue(policy.is_all_high())
        feedback = sample_paths(BAND, PolicyFeedback(policy, spec), 20000, 40, seed=8)
        constant = sample_paths(BAND, ConstVol(0.2, BINOMIAL), 20000, 40, seed=8)
        np.testing.assert_allclose(feedback.v, spec.v_high[None, :].repeat(20000, axis=0))
        for power, expected in ((2, 0.04), (4, 3 * 0.04 ** 2)):
            for ensemble in (feedback, constant):
                samples = ensemble.B[:, -1] ** power
                se = samples.std(ddof=1) / np.sqrt(samples.size)
                with self.subTest(power=power, scheme=ensemble.scheme):
                    self.assertLessEqual(abs(samples.mean() - expected), 3 * se + 0.02 * expected)

    def test_step_mismatch(self):
        spec = build_lattice(BAND, 10)
        policy = price_upper(spec, Terminal(parse_expression("max(x, 0)")))[2]
        with self.assertRaises(ValidationError) as context:
            sample_paths(BAND, PolicyFeedback(policy, spec), 10, 12, seed=1)
        self.assertEqual(context.exception.code, 'shape')


def test_default_battery():
    battery = default_battery(BAND, BINOMIAL)
    assert [scheme.tag for scheme in battery] == ['ConstVol'] * 3 + ['PiecewiseRandom'] * 3
    assert battery[2].sigma == pytest.approx(0.15)
    knot_band = make_knot_band([(0, 0), (1, 0.01)], [(0, 0), (1, 0.04)])
    assert [scheme.tag for scheme in default_battery(knot_band)][:3] == ['DeterministicProfile'] * 3
    with pytest.raises(ValidationError):
        DeterministicProfile()
    with pytest.raises(ValidationError):
        PiecewiseRandom(0)


def test_ensemble_csv():
    ensemble = sample_paths(BAND, PiecewiseRandom(2, 0.5, BINOMIAL), 7, 5, seed=123)
    stream = io.StringIO()
    ensemble_to_csv(ensemble, stream)
    text = stream.getvalue()
    assert text.startswith("# scheme=PiecewiseRandom(n_regimes=2, p_high=0.5);seed=123;")
    assert text.splitlines()[1] == 'path,knot,time,B,v'
    loaded = ensemble_from_csv(io.StringIO(text))
    assert np.array_equal(loaded.B, ensemble.B)
    assert np.array_equal(loaded.v, ensemble.v)
    assert (loaded.scheme, loaded.seed, loaded.generator, loaded.law) == \
        (ensemble.scheme, ensemble.seed, ensemble.generator, ensemble.law)
    with pytest.raises(ValidationError):
        ensemble_from_csv(io.StringIO("path,knot\n"))
