import logging
import math
import os
from typing import Mapping, Sequence, Tuple

import numpy as np
from jinja2 import Environment, FileSystemLoader, select_autoescape

log = logging.getLogger(__name__)

PALETTE = ('#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#8c564b', '#17becf', '#7f7f7f')


def make_templates_path(root):
    return os.path.join(root, 'templates')


system_templates_path = make_templates_path(os.path.dirname(__file__))
env = Environment(loader=FileSystemLoader([system_templates_path]),
                  trim_blocks=True,
                  lstrip_blocks=True,
                  keep_trailing_newline=True,
                  autoescape=select_autoescape(['svg']))


def tenv():
    return env


def render_fit_summary(result, title: str = 'Fit') -> str:
    """ Human readable table of a FitResult. """
    rows = [(name, value, result.sigmas.get(name, math.nan), result.units.get(name, ''))
            for name, value in result.params.items()]
    return tenv().get_template('fit_summary.txt').render(title=title, rows=rows, result=result)


def _ticks(low: float, high: float, count: int = 5) -> Sequence[float]:
    return list(np.linspace(low, high, count))


def render_curves_svg(series: Mapping[str, Tuple[Sequence[float], Sequence[float]]], title: str = '',
                      xlabel: str = 'time (μs)', ylabel: str = 'signal', width: int = 640, height: int = 400) -> str:
    """
    Minimal line plot, one polyline per named (x, y) series.

    :param series: label to (x values, y values); non finite points are dropped.
    """
    margin = 60
    xs = [np.asarray(x, dtype=float) for x, _ in series.values()]
    ys = [np.asarray(y, dtype=float) for _, y in series.values()]
    finite = [np.isfinite(x) & np.isfinite(y) for x, y in zip(xs, ys)]
    all_x = np.concatenate([x[f] for x, f in zip(xs, finite)] or [np.zeros(1)])
    all_y = np.concatenate([y[f] for y, f in zip(ys, finite)] or [np.zeros(1)])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(min(all_y.min(), 0.0)), float(max(all_y.max(), 1.0))
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return margin + (v - x0) / (x1 - x0) * (width - 2 * margin)

    def sy(v):
        return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin)

    lines = []
    for i, (label, x, y, keep) in enumerate(zip(series.keys(), xs, ys, finite)):
        points = ' '.join('%.2f,%.2f' % (sx(a), sy(b)) for a, b in zip(x[keep], y[keep]))
        lines.append({'label': label, 'points': points, 'color': PALETTE[i % len(PALETTE)]})
    xticks = [{'pos': sx(v), 'label': '%.3g' % v} for v in _ticks(x0, x1)]
    yticks = [{'pos': sy(v), 'label': '%.3g' % v} for v in _ticks(y0, y1)]
    log.debug('Rendering %d series to SVG' % len(lines))
    return tenv().get_template('curves.svg').render(
        title=title, xlabel=xlabel, ylabel=ylabel, width=width, height=height, margin=margin,
        lines=lines, xticks=xticks, yticks=yticks)
