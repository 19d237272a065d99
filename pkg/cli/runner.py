"""
The pipelines behind the management commands. Each returns a RunResult with
the comparable payload of the report and any CSV tables that go with it.
"""
import io
import logging
from dataclasses import dataclass, field

import django
import numpy as np
import scipy
from django.conf import settings

import superhedge
from analysis.capacity import (
    capacity, capacity_axiom_check, integral_bound_check, markov_check, sample_battery,
)
from analysis.duality import InconsistentDuality, dual_bound, duality_gap
from analysis.hedge import histogram_to_csv, shortfall_histogram, verify_superhedge
from core.payoffs import RunningMax, describe_payoff, exceedance, payoff_to_dict, scale_payoff
from lattice.convergence import convergence_sweep
from lattice.export import export_surface_csv
from lattice.grids import build_lattice
from lattice.hedging import extract_delta
from lattice.pricing import LOWER, UPPER, price_lower, price_upper
from simulate.ensembles import generator_id, sample_paths
from simulate.quadvar import qv_containment, qv_sweep, variance_containment
from simulate.schemes import IncrementLaw, default_battery

cli_log = logging.getLogger('SuperHedge.cli')


@dataclass
class RunResult:
    command: str
    provenance: dict
    result: dict
    tables: dict = field(default_factory=dict)
    error: Exception = None


def provenance(config, **engine):
    """The run's inputs; `engine` adds the settings the numbers depend on."""
    return dict({
        'command': config.command,
        'config_path': config.path,
        'config': config.sections,
        'seed': config.seed,
        'generator': generator_id(),
        'versions': {
            'superhedge': superhedge.__version__,
            'django': django.get_version(),
            'numpy': np.__version__,
            'scipy': scipy.__version__,
        },
    }, **engine)


def _lattice_settings():
    return {'running_max_correction': settings.LATTICE_RUNNING_MAX_CORRECTION}


def _claim(config):
    return {'payoff': payoff_to_dict(config.payoff), 'description': describe_payoff(config.payoff)}


def run_price(config):
    params = config.params
    spec = build_lattice(config.band, params['n_steps'])
    # Running-max surfaces grow with n² per slice; keep them only when asked for.
    full_surface = params['export_surface'] or not isinstance(config.payoff, RunningMax)
    result = dict(_claim(config), n_steps=spec.n_steps, dx=spec.dx, band=config.band.as_dict())
    tables = {}
    sides = (UPPER, LOWER) if params['side'] == 'both' else (params['side'], )
    for side in sides:
        pricer = price_upper if side == UPPER else price_lower
        price, surface, policy = pricer(spec, config.payoff, full_surface=full_surface)
        result['price_' + side] = price
        result['policy_' + side] = policy.summary() if policy is not None else None
        if params['export_surface']:
            stream = io.StringIO()
            export_surface_csv(surface, policy, extract_delta(surface), stream)
            tables['surface_' + side] = stream.getvalue()
    return RunResult('price', provenance(config, **_lattice_settings()), result, tables)


def run_hedge(config):
    params = config.params
    spec = build_lattice(config.band, params['n_steps'])
    price, surface, _policy = price_upper(spec, config.payoff)
    strategy = extract_delta(surface, params['refinement'])
    ensembles = [
        sample_paths(config.band, scheme, params['n_paths'], spec.n_steps, config.seed)
        for scheme in default_battery(config.band, params['law'])
    ]
    report = verify_superhedge(params['funding'] * price, strategy, ensembles, config.payoff, params['tolerance'])
    histogram = shortfall_histogram(report, params['histogram_bins'])
    stream = io.StringIO()
    histogram_to_csv(histogram, stream)
    result = dict(
        _claim(config), n_steps=spec.n_steps, n_paths=params['n_paths'], law=params['law'],
        price=price, hedge_capital=strategy.capital, funding=params['funding'], hedge=report.as_dict(),
        histogram=histogram,
        integral_bound=integral_bound_check(strategy, ensembles).as_dict())
    return RunResult('hedge', provenance(config, **_lattice_settings()), result, {'histogram': stream.getvalue()})


def run_duality(config):
    params = config.params
    spec = build_lattice(config.band, params['n_steps'])
    feedback = params['policy_feedback']
    primal, _surface, policy = price_upper(spec, config.payoff, full_surface=feedback)
    battery = default_battery(config.band, params['law'], policy=policy, spec=spec)
    estimates = dual_bound(config.payoff, config.band, battery, params['n_paths'], spec.n_steps, config.seed)
    report = duality_gap(primal, estimates, params['allowance'])
    result = dict(
        _claim(config), n_steps=spec.n_steps, n_paths=params['n_paths'], law=params['law'],
        duality=report.as_dict())
    error = None if report.is_consistent else InconsistentDuality(report)
    return RunResult('duality', provenance(config, **_lattice_settings()), result, error=error)


def run_capacity(config):
    params = config.params
    band, payoff = config.band, config.payoff
    battery = default_battery(band, params['law'])
    args = (band, battery, params['n_paths'], params['n_steps'], config.seed)
    ensembles = sample_battery(*args)
    estimate = capacity(payoff, *args, ensembles=ensembles)
    doubled = capacity(scale_payoff(payoff, -2.0), *args, ensembles=ensembles)
    alphas = params['alphas']
    low, high = alphas[0], alphas[-1]
    pairs = [
        (exceedance(payoff, high, 'upper'), exceedance(payoff, low, 'upper')),
        (exceedance(payoff, low, 'upper'), exceedance(payoff, low, 'upper')),
        (exceedance(payoff, low, 'upper'), exceedance(payoff, low, 'lower')),
    ]
    result = dict(
        _claim(config), n_steps=params['n_steps'], n_paths=params['n_paths'], law=params['law'],
        capacity=estimate.as_dict(),
        homogeneity={'factor': 2.0, 'scaled': doubled.value, 'expected': 2.0 * estimate.value},
        markov=[markov_check(payoff, alpha, *args, ensembles=ensembles).as_dict() for alpha in alphas],
        axioms=capacity_axiom_check(pairs, *args, ensembles=ensembles))
    return RunResult('capacity', provenance(config), result)


def run_qv(config):
    params = config.params
    band = config.band
    containment = {}
    for scheme in default_battery(band, IncrementLaw.BINOMIAL):
        ensemble = sample_paths(band, scheme, params['n_paths'], params['n_steps'], config.seed)
        containment[scheme.name] = dict(
            qv_containment(ensemble, band), variance_violations=variance_containment(ensemble, band))
    t = band.horizon if params['t'] is None else params['t']
    sweep = qv_sweep(
        band, t, params['subdivisions'], params['n_paths'], config.seed, law=params['law'],
        fine_steps=params['fine_steps'])
    result = {
        'band': band.as_dict(),
        'n_steps': params['n_steps'],
        'n_paths': params['n_paths'],
        'law': params['law'],
        'fine_steps': params['fine_steps'],
        'containment': containment,
        'sweep': sweep.as_dict(),
    }
    return RunResult('qv', provenance(config), result)


def run_converge(config):
    params = config.params
    report = convergence_sweep(config.band, config.payoff, params['steps'], params['side'])
    return RunResult(
        'converge', provenance(config, **_lattice_settings()), dict(_claim(config), convergence=report.as_dict()))


RUNNERS = {
    'price': run_price,
    'hedge': run_hedge,
    'duality': run_duality,
    'capacity': run_capacity,
    'qv': run_qv,
    'converge': run_converge,
}


def run(command, config):
    cli_log.info("Running %s from %s with seed %d", command, config.path, config.seed)
    return RUNNERS[command](config)
