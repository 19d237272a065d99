import csv
import logging
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.utils.text import format_lazy
from django.utils.translation import gettext_lazy as _

from core.bands import equal_variance_knots

from .schemes import draw_increments

simulate_log = logging.getLogger('SuperHedge.simulate')

ENSEMBLE_COLUMNS = ('path', 'knot', 'time', 'B', 'v')


def generator_id(block_size=None):
    """Identifies the random stream layout; equal identifiers and seeds give equal ensembles."""
    block_size = block_size or settings.SIMULATION_BLOCK_SIZE
    return 'numpy-PCG64/SeedSequence(seed,spawn_key=(block,))/block={}'.format(block_size)


def block_generator(seed, block):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, ))))


@dataclass(frozen=True, eq=False)
class PathEnsemble:
    B: np.ndarray
    v: np.ndarray
    time_knots: np.ndarray
    scheme: str
    seed: int
    generator: str
    law: str

    @property
    def n_paths(self):
        return self.B.shape[0]

    @property
    def n_steps(self):
        return self.B.shape[1] - 1

    @property
    def increments(self):
        return np.diff(self.B, axis=1)

    def describe(self):
        return "{} x {} steps of {} ({} law, seed {})".format(
            self.n_paths, self.n_steps, self.scheme, self.law, self.seed)


def band_steps(band, time_knots):
    """Per-step band increments (v̲_i, v̄_i) over the given knots."""
    v_high = np.diff(band.upper(time_knots))
    v_low = np.clip(np.diff(band.lower(time_knots)), 0, v_high)
    return v_low, v_high


def sample_paths(band, scheme, n_paths, n_steps, seed, time_knots=None):
    """
    Samples n_paths paths on the equal-variance knots of the band (or on the
    given knots). Paths are generated in blocks, each from its own substream
    of the seed, so the result depends only on the arguments.
    """
    if n_paths < 1:
        raise ValidationError(_("At least one path is required."), code='range')
    if time_knots is None:
        time_knots = equal_variance_knots(band, n_steps)
    time_knots = np.asarray(time_knots, dtype=float)
    if time_knots.size != n_steps + 1:
        raise ValidationError(
            format_lazy(_("{k} time knots given for {n} steps."), k=time_knots.size, n=n_steps), code='shape')
    v_low, v_high = band_steps(band, time_knots)
    time_steps = np.diff(time_knots)
    dx = float(np.sqrt(v_high.max())) if v_high.size else 0.0
    block_size = settings.SIMULATION_BLOCK_SIZE
    B = np.zeros((n_paths, n_steps + 1))
    v = np.zeros((n_paths, n_steps))
    for block, first in enumerate(range(0, n_paths, block_size)):
        rng = block_generator(seed, block)
        rows = slice(first, min(first + block_size, n_paths))
        size = rows.stop - rows.start
        context = scheme.start(v_low, v_high, time_steps, size, rng)
        x = np.zeros(size)
        for i in range(n_steps):
            variance = scheme.variance(i, context, x, v_low, v_high)
            x_new = x + draw_increments(scheme.law, variance, rng, dx)
            scheme.advance(context, x, x_new, i)
            v[rows, i], B[rows, i + 1] = variance, x_new
            x = x_new
    ensemble = PathEnsemble(
        B=B, v=v, time_knots=time_knots, scheme=scheme.name, seed=int(seed),
        generator=generator_id(block_size), law=str(scheme.law))
    simulate_log.debug("Sampled %s", ensemble.describe())
    return ensemble


def ensemble_to_csv(ensemble, stream):
    """Columnar CSV (path, knot, time, B, v) after a comment line with the provenance."""
    stream.write("# scheme={};seed={};generator={};law={}\n".format(
        ensemble.scheme, ensemble.seed, ensemble.generator, ensemble.law))
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(ENSEMBLE_COLUMNS)
    for p in range(ensemble.n_paths):
        for k, t in enumerate(ensemble.time_knots):
            variance = repr(float(ensemble.v[p, k])) if k < ensemble.n_steps else ''
            writer.writerow((p, k, repr(float(t)), repr(float(ensemble.B[p, k])), variance))


def ensemble_from_csv(stream):
    header = stream.readline()
    if not header.startswith('# '):
        raise ValidationError(_("The ensemble file lacks its provenance line."), code='shape')
    try:
        meta = dict(item.split('=', 1) for item in header[2:].strip().split(';'))
        reader = csv.DictReader(stream)
        rows = [(int(r['path']), int(r['knot']), float(r['time']), float(r['B']), r['v']) for r in reader]
    except (KeyError, ValueError) as err:
        raise ValidationError(
            format_lazy(_("Malformed ensemble file: {err}"), err=err), code='shape')
    if not rows:
        raise ValidationError(_("The ensemble file holds no paths."), code='shape')
    n_paths = max(r[0] for r in rows) + 1
    n_knots = max(r[1] for r in rows) + 1
    B, v = np.zeros((n_paths, n_knots)), np.zeros((n_paths, n_knots - 1))
    times = np.zeros(n_knots)
    for path, knot, t, value, variance in rows:
        B[path, knot], times[knot] = value, t
        if knot < n_knots - 1:
            v[path, knot] = float(variance)
    return PathEnsemble(
        B=B, v=v, time_knots=times, scheme=meta.get('scheme', ''), seed=int(meta.get('seed', 0)),
        generator=meta.get('generator', ''), law=meta.get('law', ''))
