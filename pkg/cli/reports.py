import csv
import io
import json
import logging
import math
from os import makedirs, path

import jsonschema
import numpy as np
from django.template.loader import render_to_string
from django.utils import timezone

cli_log = logging.getLogger('SuperHedge.cli')

EXTENSIONS = {'json': 'json', 'csv': 'csv', 'text': 'txt'}
SCHEMA_DIR = path.join(path.dirname(path.abspath(__file__)), 'schemas')


def plain(value):
    """Plain JSON values: numpy scalars unwrapped, tuples as lists, nan and inf as null."""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(item) for item in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def envelope(run_result, generated_at=None):
    """The report document; only `payload` is comparable between runs."""
    return {
        'meta': {'generated_at': (generated_at or timezone.now()).isoformat()},
        'payload': {
            'provenance': plain(run_result.provenance),
            'result': plain(run_result.result),
        },
    }


def load_schema(command):
    with open(path.join(SCHEMA_DIR, '{}.json'.format(command)), 'r') as schema_file:
        return json.load(schema_file)


def render_json(run_result, generated_at=None):
    """The report as sorted JSON, checked against the schema of its command."""
    document = envelope(run_result, generated_at)
    jsonschema.validate(document, load_schema(run_result.command))
    return json.dumps(document, sort_keys=True, indent=2, allow_nan=False) + '\n'


def flatten(data, prefix=''):
    """(dotted key, scalar) pairs of a nested report, in key order."""
    rows = []
    if isinstance(data, dict):
        for key in sorted(data):
            rows.extend(flatten(data[key], '{}.{}'.format(prefix, key) if prefix else str(key)))
    elif isinstance(data, list) and any(isinstance(item, (dict, list)) for item in data):
        for index, item in enumerate(data):
            rows.extend(flatten(item, '{}.{}'.format(prefix, index)))
    elif isinstance(data, list):
        rows.append((prefix, ' '.join(_scalar(item) for item in data)))
    else:
        rows.append((prefix, _scalar(data)))
    return rows


def _scalar(value):
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(run_result):
    stream = io.StringIO()
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(('key', 'value'))
    writer.writerows(flatten(plain({'provenance': run_result.provenance, 'result': run_result.result})))
    return stream.getvalue()


def render_text(run_result, generated_at=None):
    rows = flatten(plain(run_result.result))
    context = {
        'command': run_result.command,
        'generated_at': (generated_at or timezone.now()).isoformat(),
        'provenance': run_result.provenance,
        'rows': rows,
        'width': max((len(key) for key, value in rows), default=0),
    }
    return render_to_string('cli/report.txt', context)


RENDERERS = {
    'json': render_json,
    'csv': lambda run_result, generated_at=None: render_csv(run_result),
    'text': render_text,
}


def write_reports(run_result, out_dir, report_format='json', generated_at=None):
    """
    Writes `<command>.<ext>` and one `<command>_<table>.csv` per table into
    out_dir; returns the paths written.
    """
    makedirs(out_dir, exist_ok=True)
    written = []
    report_path = path.join(out_dir, '{}.{}'.format(run_result.command, EXTENSIONS[report_format]))
    with open(report_path, 'w', newline='') as report_file:
        report_file.write(RENDERERS[report_format](run_result, generated_at))
    written.append(report_path)
    for name in sorted(run_result.tables):
        table_path = path.join(out_dir, '{}_{}.csv'.format(run_result.command, name))
        with open(table_path, 'w', newline='') as table_file:
            table_file.write(run_result.tables[name])
        written.append(table_path)
    cli_log.info("Wrote %s", ', '.join(written))
    return written
