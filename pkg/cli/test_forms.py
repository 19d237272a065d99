import pytest
from django.conf import settings
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from core.payoffs import Cylindrical, Terminal

from .config import ConfigFileError, load_config
from .forms import BandForm, ConvergeForm, DualityForm, HedgeForm, PayoffForm, PriceForm, QVForm


class BandFormTests(SimpleTestCase):
    def test_vol_band(self):
        form = BandForm({'sigma_low': '0.1', 'sigma_high': '0.2'})
        self.assertTrue(form.is_valid(), form.errors)
        band = form.build()
        self.assertEqual(band.sigma_pair, (0.1, 0.2))
        self.assertEqual(band.horizon, 1.0)

    def test_ordering_names_both_keys(self):
        form = BandForm({'sigma_low': '0.3', 'sigma_high': '0.2'})
        self.assertFalse(form.is_valid())
        lines = form.error_list()
        self.assertIn("[band] sigma_low: sigma_low > sigma_high", lines)
        self.assertIn("[band] sigma_high: sigma_low > sigma_high", lines)

    def test_unknown_key(self):
        form = BandForm({'sigma_low': '0.1', 'sigma_high': '0.2', 'colour': 'blue'})
        self.assertFalse(form.is_valid())
        self.assertEqual(form.error_list(), ["[band] colour: Unknown key 'colour'."])

    def test_needs_exactly_one_description(self):
        self.assertFalse(BandForm({}).is_valid())
        form = BandForm({'sigma_low': '0.1', 'sigma_high': '0.2', 'knot_table': __file__})
        self.assertFalse(form.is_valid())
        form = BandForm({'knot_table': '/nonexistent/knots.csv'})
        self.assertFalse(form.is_valid())
        self.assertTrue(any(line.startswith("[band] knot_table:") for line in form.error_list()))

    def test_nonpositive_horizon(self):
        form = BandForm({'sigma_low': '0.1', 'sigma_high': '0.2', 'horizon': '0'})
        self.assertFalse(form.is_valid())
        self.assertEqual(form.errors.as_data()['horizon'][0].code, 'horizon')


class PayoffFormTests(SimpleTestCase):
    def test_terminal(self):
        form = PayoffForm({'expression': 'max(x, 0)'})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertIsInstance(form.cleaned_data['payoff'], Terminal)

    def test_cylindrical(self):
        form = PayoffForm({'kind': 'cylindrical', 'expression': '(x2 - x1)^2', 'dates': '0.5, 1'})
        self.assertTrue(form.is_valid(), form.errors)
        self.assertEqual(form.cleaned_data['payoff'], Cylindrical((0.5, 1.0), form.cleaned_data['payoff'].F))
        form = PayoffForm({'kind': 'cylindrical', 'expression': 'x1'})
        self.assertFalse(form.is_valid())
        self.assertIn('dates', form.errors)
        form = PayoffForm({'kind': 'cylindrical', 'expression': 'x3', 'dates': '0.5,1'})
        self.assertFalse(form.is_valid())
        self.assertIn('expression', form.errors)

    def test_grammar_error(self):
        form = PayoffForm({'expression': 'max(x,'})
        self.assertFalse(form.is_valid())
        self.assertTrue(form.error_list()[0].startswith("[payoff] expression:"))
        form = PayoffForm({'kind': 'time_integral', 'expression': 'x', 'integrand': 'sin(x)'})
        self.assertFalse(form.is_valid())
        self.assertIn('integrand', form.errors)


def test_defaults_are_filled():
    form = PriceForm({})
    assert form.is_valid(), form.errors
    assert form.cleaned_data == {'n_steps': 400, 'side': 'both', 'export_surface': False}
    duality = DualityForm({'policy_feedback': 'false'})
    assert duality.is_valid(), duality.errors
    assert duality.cleaned_data['policy_feedback'] is False
    defaults = DualityForm({})
    assert defaults.is_valid(), defaults.errors
    assert defaults.cleaned_data['policy_feedback'] is True
    hedge = HedgeForm({})
    assert hedge.is_valid(), hedge.errors
    assert hedge.cleaned_data['refinement'] == settings.HEDGE_GRID_REFINEMENT


def test_separated_values():
    form = ConvergeForm({'steps': '25, 50,100'})
    assert form.is_valid()
    assert form.cleaned_data['steps'] == [25, 50, 100]
    assert not ConvergeForm({'steps': '25'}).is_valid()
    assert not ConvergeForm({'steps': '25, many'}).is_valid()


def test_qv_subdivisions_divide_fine_grid():
    assert QVForm({'subdivisions': '4, 8', 'fine_steps': '64'}).is_valid()
    form = QVForm({'subdivisions': '3, 8', 'fine_steps': '64'})
    assert not form.is_valid()
    assert form.errors.as_data()['subdivisions'][0].code == 'resolution'


@pytest.mark.parametrize('t', ['0', '-0.5', '1.5'])
def test_qv_time_outside_horizon(t):
    form = QVForm({'t': t}, horizon=1.0)
    assert not form.is_valid()
    assert form.errors.as_data()['t'][0].code == 'range'
    assert form.error_list()[0].startswith("[qv] t:")


def test_qv_time_defaults_to_horizon():
    form = QVForm({}, horizon=2.0)
    assert form.is_valid(), form.errors
    assert form.cleaned_data['t'] == 2.0
    form = QVForm({'t': '2'}, horizon=2.0)
    assert form.is_valid(), form.errors
    assert form.cleaned_data['t'] == 2.0
    assert not QVForm({'t': '0'}).is_valid()


def write_config(tmp_path, text, name='run.ini'):
    config_path = tmp_path / name
    config_path.write_text(text)
    return str(config_path)


def test_load_config(tmp_path):
    config_path = write_config(tmp_path, (
        "[run]\nseed = 7\n\n[band]\nsigma_low = 0.1\nsigma_high = 0.2\n\n"
        "[payoff]\nexpression = max(x, 0)\n\n[price]\nn_steps = 50\n"
    ))
    config = load_config(config_path, 'price')
    assert config.seed == 7
    assert config.params['n_steps'] == 50
    assert config.sections['band'] == {'sigma_low': '0.1', 'sigma_high': '0.2'}
    assert config.with_overrides(seed=11).seed == 11
    assert config.with_overrides(format='text').format == 'text'


def test_load_config_collects_every_error(tmp_path):
    config_path = write_config(tmp_path, (
        "[band]\nsigma_low = 0.3\nsigma_high = 0.2\n\n[payoff]\nexpression = max(x, 0\n\n"
        "[price]\nsteps = 50\n\n[extras]\nfoo = 1\n"
    ))
    with pytest.raises(ValidationError) as excinfo:
        load_config(config_path, 'price')
    messages = excinfo.value.messages
    assert "[extras] Unknown section." in messages
    assert "[band] sigma_low: sigma_low > sigma_high" in messages
    assert "[price] steps: Unknown key 'steps'." in messages
    assert any(message.startswith("[payoff] expression:") for message in messages)


def test_knot_table_band(tmp_path):
    table = tmp_path / 'knots.csv'
    table.write_text("t,lower,upper\n0,0,0\n0.5,0.002,0.03\n1,0.01,0.04\n")
    config_path = write_config(tmp_path, "[band]\nknot_table = {}\n".format(table))
    config = load_config(config_path, 'qv')
    assert config.band.total_upper == 0.04
    assert config.payoff is None
    assert config.params['t'] == 1.0


def test_qv_time_checked_against_band(tmp_path):
    config_path = write_config(tmp_path, "[band]\nsigma_low = 0.1\nsigma_high = 0.2\n\n[qv]\nt = 0\n")
    with pytest.raises(ValidationError) as excinfo:
        load_config(config_path, 'qv')
    assert [message for message in excinfo.value.messages if message.startswith("[qv] t:")]


def test_missing_file(tmp_path):
    with pytest.raises(ConfigFileError):
        load_config(str(tmp_path / 'absent.ini'), 'price')
