import numpy as np
import pytest
from django.test import SimpleTestCase
from scipy.stats import norm

from core.bands import make_vol_band
from core.expressions import Const, parse_expression, x1, x2
from core.payoffs import Cylindrical, RunningMax, Terminal, TimeIntegral, add_payoffs, scale_payoff

from .grids import build_lattice
from .pricing import TIE_TOLERANCE, consistency_residual, price_lower, price_upper

BAND = make_vol_band(0.1, 0.2, 1.0)
CALL = Terminal(parse_expression("max(x, 0)"))
PUT = Terminal(parse_expression("max(-x, 0)"))
BUTTERFLY = Terminal(parse_expression("max(x+0.1,0) - 2*max(x,0) + max(x-0.1,0)"))
SQUARE = Terminal(x1 ** 2)

# E max(N(0, v), 0) and the related closed forms of the additive model.
BACHELIER_CALL = np.sqrt(0.04 / (2 * np.pi))
NEGATIVE_ABS = -np.sqrt(2 * 0.01 / np.pi)
LOOKBACK = np.sqrt(2 * 0.04 / np.pi)


def upper(payoff, n_steps=60, band=BAND):
    return price_upper(build_lattice(band, n_steps), payoff, full_surface=False)[0]


def lower(payoff, n_steps=60, band=BAND):
    return price_lower(build_lattice(band, n_steps), payoff, full_surface=False)[0]


class OracleTests(SimpleTestCase):
    def test_second_moment(self):
        for n_steps in (1, 4, 50, 400):
            with self.subTest(n_steps=n_steps):
                self.assertEqual(upper(SQUARE, n_steps), pytest.approx(0.04, rel=1e-12))
                self.assertEqual(lower(SQUARE, n_steps), pytest.approx(0.01, rel=1e-12))

    def test_call(self):
        self.assertEqual(upper(CALL, 400), pytest.approx(BACHELIER_CALL, rel=5e-3))
        self.assertAlmostEqual(BACHELIER_CALL, 0.0797885, places=7)

    def test_concave(self):
        self.assertEqual(upper(Terminal(-abs(x1)), 400), pytest.approx(NEGATIVE_ABS, rel=5e-3))

    def test_constant(self):
        self.assertEqual(upper(Terminal(Const(5.0)), 17), 5.0)
        self.assertEqual(lower(Terminal(Const(5.0)), 17), 5.0)

    def test_linear(self):
        self.assertEqual(lower(Terminal(x1), 40), pytest.approx(0, abs=1e-15))
        self.assertEqual(upper(Terminal(x1), 40), pytest.approx(0, abs=1e-15))

    def test_lookback(self):
        self.assertAlmostEqual(LOOKBACK, 0.1595769, places=7)
        self.assertEqual(upper(RunningMax(x1), 400), pytest.approx(LOOKBACK, rel=0.02))

    def test_time_integral_is_replicable(self):
        payoff = TimeIntegral(x1, x1)
        self.assertEqual(upper(payoff, 200), pytest.approx(0, abs=1e-3))
        self.assertEqual(lower(payoff, 200), pytest.approx(0, abs=1e-3))

    def test_forward_variance(self):
        payoff = Cylindrical((0.5, 1.0), (x2 - x1) ** 2)
        for n_steps in (2, 20, 64):
            with self.subTest(n_steps=n_steps):
                self.assertEqual(upper(payoff, n_steps), pytest.approx(0.02, rel=1e-10))
                self.assertEqual(lower(payoff, n_steps), pytest.approx(0.005, rel=1e-10))

    def test_early_settlement(self):
        payoff = Cylindrical((0.5, ), x1 ** 2)
        price, surface, policy = price_upper(build_lattice(BAND, 20), payoff)
        self.assertEqual(price, pytest.approx(0.02, rel=1e-12))
        self.assertTrue(np.isnan(surface.values[15]).all())
        self.assertTrue(policy.is_all_high())

    def test_degenerate_band_collapses(self):
        band = make_vol_band(0.2, 0.2, 1.0)
        for payoff in (CALL, BUTTERFLY, Terminal(-abs(x1)), RunningMax(x1), TimeIntegral(x1 ** 2, x1)):
            with self.subTest(payoff=payoff):
                self.assertEqual(upper(payoff, 40, band), pytest.approx(lower(payoff, 40, band), rel=1e-12))


class PropertyTests(SimpleTestCase):
    def test_weak_duality_against_lower(self):
        for payoff in (CALL, BUTTERFLY, SQUARE, RunningMax(x1), TimeIntegral(x1 ** 2, x1)):
            with self.subTest(payoff=payoff):
                self.assertLessEqual(lower(payoff, 40), upper(payoff, 40) + 1e-12)

    def test_sublinearity(self):
        both = add_payoffs(CALL, PUT)
        self.assertLessEqual(upper(both), upper(CALL) + upper(PUT) + 1e-12)
        self.assertGreaterEqual(upper(BUTTERFLY) + upper(scale_payoff(BUTTERFLY, -1)), 0)
        for factor in (0, 0.5, 2.5):
            with self.subTest(factor=factor):
                self.assertEqual(
                    upper(scale_payoff(BUTTERFLY, factor)), pytest.approx(factor * upper(BUTTERFLY), abs=1e-15))

    def test_monotonicity(self):
        self.assertLessEqual(upper(PUT), upper(Terminal(abs(x1))))
        self.assertLessEqual(upper(BUTTERFLY), upper(Terminal(Const(0.1))))
        self.assertLessEqual(upper(RunningMax(parse_expression("max(x - 0.1, 0)"))), upper(RunningMax(x1)))

    def test_convex_claims_choose_high_everywhere(self):
        spec = build_lattice(BAND, 50)
        for payoff in (CALL, SQUARE, Terminal(parse_expression("max(x - 0.05, 0) + 3*max(-x - 0.2, 0)"))):
            with self.subTest(payoff=payoff):
                self.assertTrue(price_upper(spec, payoff)[2].is_all_high())

    def test_concave_claims_choose_low(self):
        policy = price_upper(build_lattice(BAND, 50), Terminal(-abs(x1)))[2]
        # The kink stays within reach of x = 0 at every step.
        self.assertFalse(any(policy.choice[i][50, 0] for i in range(50)))
        self.assertLess(policy.high_fraction(), 1.0)
        self.assertFalse(policy.is_all_high())

    def test_bang_bang_consistency(self):
        spec = build_lattice(BAND, 40)
        payoffs = (BUTTERFLY, RunningMax(parse_expression("min(x, 0.1)")), TimeIntegral(x1 ** 2, -abs(x1)),
                   Cylindrical((0.5, 1.0), parse_expression("max(x2 - x1, 0) - 0.5*abs(x1)")))
        for payoff in payoffs:
            for pricer in (price_upper, price_lower):
                with self.subTest(payoff=payoff, side=pricer.__name__):
                    _price, surface, policy = pricer(spec, payoff)
                    self.assertLessEqual(consistency_residual(surface, policy), 1e-12)

    def test_choice_follows_second_difference(self):
        spec = build_lattice(BAND, 24)
        payoffs = (
            BUTTERFLY,
            Cylindrical((0.5, ), parse_expression("max(x + 0.05, 0) - max(x - 0.05, 0) - abs(x)")),
            RunningMax(parse_expression("min(x, 0.1)")),
            TimeIntegral(x1 ** 2, -abs(x1)),
            Cylindrical((0.5, 1.0), parse_expression("max(x2 - x1, 0) - 0.5*abs(x1)")),
        )
        for payoff in payoffs:
            for pricer, sign in ((price_upper, 1), (price_lower, -1)):
                with self.subTest(payoff=payoff.kind, side=pricer.__name__):
                    _price, surface, policy = pricer(spec, payoff)
                    aux = surface.aux
                    for i in range(aux.settlement):
                        up, mid, down = aux.successors(aux.next_values(surface.values[i + 1], i), i)
                        gamma = up + down - 2 * mid
                        tie = TIE_TOLERANCE * (np.abs(up) + 2 * np.abs(mid) + np.abs(down))
                        # Ties go to the upper endpoint on both sides.
                        expected = (np.abs(gamma) <= tie) | (sign * gamma > 0)
                        mask = aux.valid_mask(i)
                        np.testing.assert_array_equal(policy.choice[i][mask], expected[mask])

    def test_full_surface_matches_price_only(self):
        spec = build_lattice(BAND, 30)
        price, surface, policy = price_upper(spec, BUTTERFLY)
        self.assertEqual(price, price_upper(spec, BUTTERFLY, full_surface=False)[0])
        self.assertEqual(price, surface.values[0][30, 0])
        self.assertEqual(len(policy.choice), 30)

    def test_lower_is_minus_upper_of_negative(self):
        for payoff in (BUTTERFLY, RunningMax(x1)):
            with self.subTest(payoff=payoff):
                self.assertEqual(lower(payoff, 30), pytest.approx(-upper(scale_payoff(payoff, -1), 30), abs=1e-14))


def test_call_against_normal_cdf_at_other_strikes():
    spec = build_lattice(BAND, 400)
    for strike in (-0.1, 0.1):
        payoff = Terminal(parse_expression("max(x - {}, 0)".format(strike)))
        # Bachelier: (0 - K)·Φ(-K/s) + s·φ(K/s) with s² = μ̄_T.
        s = 0.2
        oracle = -strike * norm.cdf(-strike / s) + s * norm.pdf(strike / s)
        assert price_upper(spec, payoff, full_surface=False)[0] == pytest.approx(oracle, rel=1e-2)
