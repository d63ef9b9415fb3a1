""" Reading and writing decay curves, tables, JSON documents and run manifests. """
import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from datetime import datetime, timezone
from typing import Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .errors import DataFormatError
from .noise import NoiseTrajectory
from .sequences import DecayCurve
from .version import VERSION

log = logging.getLogger(__name__)

CURVE_COLUMNS = ('time_us', 'signal', 'sigma')
COLLAPSE_COLUMNS = ('t_rescaled', 'signal', 'sigma')
TRAJECTORY_COLUMNS = ('time_us', 'delta_rad_per_us')
MANIFEST_NAME = 'manifest.json'


def _number(value) -> str:
    # repr keeps round trips exact and never localizes the decimal separator
    value = float(value)
    if math.isnan(value):
        return 'nan'
    return repr(value)


def write_atomic(path: str, text: str) -> str:
    """ Write `text` as UTF-8 to a temporary file next to `path` and rename it in place. """
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temporary = tempfile.mkstemp(prefix='.tmp-', dir=directory)
    try:
        with open(handle, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    log.debug('Wrote %s' % path)
    return path


def table_to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow([_number(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def curve_to_csv(curve: DecayCurve, time_column: Optional[str] = None) -> str:
    """
    CSV text with a `time_us,signal[,sigma]` header.

    :param time_column: header of the first column, defaults to the curve's metadata or `time_us`.
    """
    time_column = time_column or curve.metadata.get('time_column', CURVE_COLUMNS[0])
    if curve.sigmas is None:
        return table_to_csv((time_column, 'signal'), zip(map(float, curve.times), map(float, curve.values)))
    return table_to_csv((time_column, 'signal', 'sigma'),
                        zip(map(float, curve.times), map(float, curve.values), map(float, curve.sigmas)))


def write_curve(path: str, curve: DecayCurve, time_column: Optional[str] = None) -> str:
    return write_atomic(path, curve_to_csv(curve, time_column))


def _parse_float(text: str, where: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataFormatError('%s: %r is not a number.' % (where, text))


def curve_from_csv(text: str, source: str = '<string>') -> DecayCurve:
    """
    Parse a decay curve. The header must name `time_us` (or `t_rescaled`) and `signal`,
    `sigma` is optional and extra columns are ignored.
    """
    rows = list(csv.reader(io.StringIO(text)))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataFormatError('%s is empty.' % source)
    header = [cell.strip() for cell in rows[0]]
    time_column = next((name for name in (CURVE_COLUMNS[0], COLLAPSE_COLUMNS[0]) if name in header), None)
    if time_column is None or 'signal' not in header:
        raise DataFormatError('%s: header %r lacks a time_us and a signal column.' % (source, header))
    columns = {name: header.index(name) for name in (time_column, 'signal', 'sigma') if name in header}

    times, values, sigmas = [], [], []
    for number, row in enumerate(rows[1:], start=2):
        if len(row) < len(header):
            raise DataFormatError('%s line %d: expected %d fields, got %d.' % (source, number, len(header), len(row)))
        where = '%s line %d' % (source, number)
        times.append(_parse_float(row[columns[time_column]], where))
        values.append(_parse_float(row[columns['signal']], where))
        if 'sigma' in columns:
            sigmas.append(_parse_float(row[columns['sigma']], where))
    metadata = {'source': source, 'time_column': time_column}
    try:
        return DecayCurve(times, values, sigmas if 'sigma' in columns else None, metadata)
    except DataFormatError as e:
        raise DataFormatError('%s: %s' % (source, e))


def read_curve(path: str) -> DecayCurve:
    if not os.path.isfile(path):
        raise DataFormatError('No such curve file: %s' % path)
    with open(path, encoding='utf-8') as f:
        return curve_from_csv(f.read(), path)


def write_trajectory(path: str, trajectory: NoiseTrajectory) -> str:
    return write_atomic(path, table_to_csv(TRAJECTORY_COLUMNS,
                                           zip(map(float, trajectory.times), map(float, trajectory.samples))))


def read_trajectory(path: str) -> NoiseTrajectory:
    with open(path, encoding='utf-8') as f:
        rows = list(csv.reader(f))
    if not rows or tuple(cell.strip() for cell in rows[0][:2]) != TRAJECTORY_COLUMNS:
        raise DataFormatError('%s: expected the header %s.' % (path, ','.join(TRAJECTORY_COLUMNS)))
    data = np.array([[_parse_float(cell, path) for cell in row[:2]] for row in rows[1:] if row], dtype=float)
    if len(data) < 2:
        raise DataFormatError('%s: a trajectory needs at least two samples.' % path)
    steps = np.diff(data[:, 0])
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise DataFormatError('%s: trajectory times must be evenly spaced.' % path)
    return NoiseTrajectory(float(steps[0]), data[:, 1])


def write_table(path: str, rows: Sequence[Mapping], columns: Optional[Sequence[str]] = None) -> str:
    """ Rows of dictionaries as CSV, columns in the given order or in the first row's order. """
    if not rows and not columns:
        raise DataFormatError('Nothing to write to %s.' % path)
    columns = list(columns or rows[0].keys())
    return write_atomic(path, table_to_csv(columns, ([row[c] for c in columns] for row in rows)))


def read_table(path: str) -> List[dict]:
    with open(path, encoding='utf-8') as f:
        reader = csv.DictReader(f)
        return [{key: _parse_float(value, path) for key, value in row.items()} for row in reader]


def _json_safe(value):
    """ Copy of a document with non finite floats replaced by None. """
    if isinstance(value, Mapping):
        return {key: _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def write_json(path: str, document) -> str:
    if not isinstance(document, str):
        document = json.dumps(_json_safe(document), sort_keys=True, indent=2, default=str, allow_nan=False)
    return write_atomic(path, document + '\n')


def read_json(path: str):
    try:
        with open(path, encoding='utf-8') as f:
            return json.load(f)
    except ValueError as e:
        raise DataFormatError('%s is not valid JSON: %s' % (path, e))


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for block in iter(lambda: f.read(1 << 16), b''):
            digest.update(block)
    return digest.hexdigest()


def write_manifest(out_dir: str, command: str, config: Mapping, seed: Optional[int], files: Sequence[str],
                   argv: Optional[Sequence[str]] = None) -> str:
    """
    Record what produced the files in `out_dir`. Everything except `created` is a function of the
    inputs, so reruns can be compared by their file digests.
    """
    document = {
        'tool': 'surfspin',
        'version': VERSION,
        'command': command,
        'argv': list(argv or []),
        'seed': seed,
        'config': dict(config),
        'created': datetime.now(timezone.utc).isoformat(),
        'files': [{'name': os.path.relpath(p, out_dir), 'sha256': sha256_file(p)} for p in files],
    }
    return write_json(os.path.join(out_dir, MANIFEST_NAME), document)
