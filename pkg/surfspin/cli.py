#!/usr/bin/env python
""" The `surfspin` command line: one subcommand per analysis, CSV and JSON outputs plus a run manifest. """
import argparse
import logging
import math
import os
import sys
from os import path

import numpy as np

from surfspin import bootstrap
from surfspin.cluster import ClusterTemplate, sequence_response, spin_lock_decay, sz_autocorrelation
from surfspin.constants import constants_from_config
from surfspin.dataio import read_curve, write_atomic, write_curve, write_json, write_manifest, write_table
from surfspin.errors import ConfigurationError, DomainError, SurfSpinError, exit_code_for
from surfspin.hopping import (HoppingParams, collapse_spread, collapse_transform, effective_disorder,
                              predict_tz, scan_wtau, survival_closed, survival_integral, t1rho_rate)
from surfspin.inference import DEFAULT_OMEGA_L, extract_density, fit_joint, fit_stretched_exp
from surfspin.noise import Component, LayerKind, NoiseModel, depth_from_brms
from surfspin.sequences import (DecayCurve, PulseSequence, SequenceKind, closed_form_prediction,
                                numeric_prediction)
from surfspin.templating import render_curves_svg, render_fit_summary
from surfspin.version import VERSION

log = logging.getLogger(__name__)

# (W, τ) of seven systems spanning 2 to 6 rad/μs and 5 to 30 μs
SYNTHETIC_SYSTEMS = ((2.1, 28.0), (2.9, 19.0), (3.5, 14.6), (3.8, 9.5), (4.4, 14.6), (5.2, 7.0), (6.0, 5.2))


class Run(object):
    """ What a subcommand needs: parsed arguments, resolved config, output directory and emitted files. """

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.constants = constants_from_config(config)
        self.out_dir = path.abspath(args.out or config.OUTPUT_DIR)
        self.files = []

    def emit(self, name: str, writer, *payload) -> str:
        filename = path.join(self.out_dir, name)
        writer(filename, *payload)
        self.files.append(filename)
        log.info('Emitted %s' % filename)
        return filename

    def emit_svg(self, name: str, series, **labels):
        if self.args.svg:
            self.emit(name, write_atomic, render_curves_svg(series, **labels))

    @property
    def pi_equivalents(self):
        return self.config.PI_EQUIVALENTS

    def hopping_params(self) -> HoppingParams:
        args = self.args
        return HoppingParams(alpha=self.config.HOPPING_ALPHA, beta=self.config.HOPPING_BETA,
                             kappa=self.config.HOPPING_KAPPA, density=1 / args.separation ** 2,
                             j0=self.constants.j0, r0=self.config.ENSEMBLE_MIN_RADIUS)


def _grid(tmax: float, points: int) -> np.ndarray:
    if not tmax > 0 or points < 2:
        raise DomainError('Need tmax > 0 and at least 2 points, got %r and %r.' % (tmax, points))
    return np.linspace(0.0, tmax, points)


def _noise(args) -> NoiseModel:
    return NoiseModel(args.w, args.tau, args.omega_l)


def _floats(text: str):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise ConfigurationError('Expected a comma separated list of numbers, got %r.' % text)


def cmd_predict(run: Run):
    args = run.args
    kind = SequenceKind.from_name(args.seq)
    sequence = PulseSequence(kind, detuning=args.detuning, pi_time=args.pi_time)
    model = _noise(args)
    times = _grid(args.tmax, args.points)
    name = kind.value.lower()
    closed = closed_form_prediction(sequence, times, model, args.t2, run.config.ENVELOPE_COEFFS,
                                    run.pi_equivalents)
    run.emit('%s_closed_form.csv' % name, write_curve, closed)
    series = {'closed form': (closed.times, closed.values)}
    if not args.no_numeric:
        numeric = numeric_prediction(sequence, times, model, args.t2, pi_equivalents=run.pi_equivalents,
                                     constants=run.constants, rtol=run.config.QUAD_RTOL,
                                     max_levels=run.config.QUAD_MAX_LEVELS)
        run.emit('%s_numeric.csv' % name, write_curve, numeric)
        series['numeric'] = (numeric.times, numeric.values)
    run.emit_svg('%s.svg' % name, series, title='%s prediction' % kind.value)
    print('%s: W = %g rad/us, tau = %g us, T2 = %g us, %d points' % (kind.value, args.w, args.tau, args.t2,
                                                                      len(times)))


def _cached_simulation(run: Run, key: dict, compute):
    """ Look up an averaged simulation in the configured storage before running it. """
    def simulate():
        result = compute()
        return {'correlation': result.correlation, 'stderr': result.stderr}

    with bootstrap.open_cache(run.config) as cache:
        arrays = cache.cached(key, simulate)
    return arrays['correlation'], arrays['stderr']


def cmd_simulate(run: Run):
    args, config = run.args, run.config
    template = ClusterTemplate(args.n_spins, _noise(args), density=1 / args.separation ** 2, dt=args.dt,
                               min_radius=config.ENSEMBLE_MIN_RADIUS, max_radius=config.ENSEMBLE_MAX_RADIUS,
                               flip_flop=not args.no_flip_flop, include_larmor=not args.no_larmor,
                               max_spins=config.CLUSTER_MAX_SPINS, tilt=config.FIELD_TILT,
                               azimuth=config.FIELD_AZIMUTH, constants=run.constants)
    times = _grid(args.tmax, args.points)
    n, seed, threads = args.realizations or 1, args.seed, config.THREADS
    observable = args.observable.lower()
    if observable == 'sz':
        def compute():
            return sz_autocorrelation(template, times, n, seed, threads)
    elif observable == 'spinlock':
        def compute():
            return spin_lock_decay(template, args.omega, times, n, seed, threads)
    else:
        sequence = PulseSequence(SequenceKind.from_name(observable), detuning=args.detuning, pi_time=args.pi_time)
        observable = sequence.kind.value.lower()

        def compute():
            return sequence_response(template, sequence, times, n, seed, threads, run.pi_equivalents)

    key = dict(template.describe(), observable=observable, omega=args.omega, detuning=args.detuning,
               pi_time=args.pi_time, times=list(map(float, times)), n_realizations=n, seed=seed)
    correlation, stderr = _cached_simulation(run, key, compute)
    curve = DecayCurve(times, correlation, stderr)
    run.emit('simulate_%s.csv' % observable, write_curve, curve)
    run.emit_svg('simulate_%s.svg' % observable, {observable: (times, correlation)},
                 title='%d spin cluster, %d realizations' % (args.n_spins, n))
    print('%s: %d spins, %d realizations, final value %.4f ± %.4f' % (observable, args.n_spins, n,
                                                                     correlation[-1], stderr[-1]))


def _linear_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    r2 = 1 - np.sum(residual ** 2) / np.sum((y - np.mean(y)) ** 2)
    return float(slope), float(intercept), float(r2)


def cmd_hopping(run: Run):
    args = run.args
    params = run.hopping_params()
    if args.scan_wtau:
        rows = scan_wtau(_floats(args.ws), _floats(args.taus), params, args.j1, form='long')
        run.emit('scan_wtau.csv', write_table, rows, ('w', 'tau', 'w_e', 'tau_e', 'wtau_e', 't_z', 't_1e'))
        x = np.array([row['wtau_e'] for row in rows])
        slope, intercept, r2 = _linear_fit(x, np.array([row['t_1e'] for row in rows]))
        run.emit('scan_wtau_fit.json', write_json, {'slope': slope, 'intercept': intercept, 'r2': r2,
                                                    'x': 'wtau_e', 'y': 't_1e'})
        run.emit_svg('scan_wtau.svg', {'T_1/e': (x[np.argsort(x)], np.sort([r['t_1e'] for r in rows]))},
                     xlabel='τ_e W_e', ylabel='T_1/e (μs)')
        print('T_1/e = %.4g·(W_e τ_e) + %.4g, R² = %.5f over %d points' % (slope, intercept, r2, len(rows)))
        return

    tmax = args.tmax if args.tmax is not None else 100 * args.tau
    times = _grid(tmax, args.points)
    closed = DecayCurve(times, survival_closed(times, args.w, args.tau, params, args.form, renormalize=True))
    run.emit('survival_closed.csv', write_curve, closed)
    series = {'closed form': (times, closed.values)}
    if args.integral:
        integral = DecayCurve(times, survival_integral(times, args.w, args.tau, params))
        run.emit('survival_integral.csv', write_curve, integral)
        series['integral'] = (times, integral.values)
    t_z = predict_tz(args.w, args.tau, args.j1, params.mean_coupling, params.kappa)
    effective = effective_disorder(args.w, args.tau, args.j1, t_z)
    summary = {'t_z': t_z, 'w_e': effective.w_e, 'tau_e': effective.tau_e, 'j_mean': params.mean_coupling,
               'units': {'t_z': 'us', 'w_e': 'rad/us', 'tau_e': 'us', 'j_mean': 'rad/us'}}
    if args.t2:
        summary['t_z_over_t2'] = t_z / args.t2
    run.emit('tz.json', write_json, summary)
    run.emit_svg('survival.svg', series, title='Surface spin survival')
    print('T_z = %.4g us (W_e = %.4g rad/us, tau_e = %.4g us)' % (t_z, effective.w_e, effective.tau_e))


def cmd_fit(run: Run):
    args, config = run.args, run.config
    if args.joint:
        names = ('ramsey', 'echo', 'xy4', 'mrev8')
        given = [getattr(args, name) for name in names]
        if all(given):
            curves = {name: read_curve(p) for name, p in zip(names, given)}
        elif any(given):
            raise ConfigurationError('A joint fit needs all of --ramsey, --echo, --xy4 and --mrev8, or none.')
        else:
            from surfspin.fixtures import joint_fixture
            log.info('No curves given, fitting the packaged synthetic dataset.')
            curves = joint_fixture()
        init = {'omega_l': args.omega_l}
        if args.detuning is not None:
            init['detuning'] = args.detuning
        result = fit_joint(curves['ramsey'], curves['echo'], curves['xy4'], curves['mrev8'], init=init,
                           envelope=config.ENVELOPE_COEFFS, starts=config.FIT_STARTS, max_nfev=config.FIT_MAX_NFEV,
                           xtol=config.FIT_XTOL, seed=args.seed, threads=config.THREADS)
        title = 'Joint fit'
        series = {name: (c.times, c.values) for name, c in curves.items()}
    else:
        if not args.curve:
            raise ConfigurationError('Give --joint or a --curve to fit a stretched exponential to.')
        curve = read_curve(args.curve)
        result = fit_stretched_exp(curve, args.power, max_nfev=config.FIT_MAX_NFEV, xtol=config.FIT_XTOL)
        title = 'Stretched exponential fit'
        series = {'data': (curve.times, curve.values)}
        if math.isfinite(result.params['timescale']):
            p = result.params
            series['fit'] = (curve.times, p['amplitude'] * np.exp(-(curve.times / p['timescale']) ** p['power']))
    run.emit('fit.json', write_json, result.to_json())
    run.emit_svg('fit.svg', series, title=title)
    print(render_fit_summary(result, title), end='')


def cmd_collapse(run: Run):
    args = run.args
    params = run.hopping_params()
    curves, disorder = [], []
    if args.system:
        for filename, w, tau in args.system:
            w, tau = float(w), float(tau)
            curves.append(read_curve(filename))
            t_z = predict_tz(w, tau, args.j1, params.mean_coupling, params.kappa) if args.j1 > 0 else math.inf
            disorder.append(effective_disorder(w, tau, args.j1, t_z))
    elif args.synthetic:
        for w, tau in SYNTHETIC_SYSTEMS:
            times = _grid(300.0, args.points)
            curves.append(DecayCurve(times, survival_closed(times, w, tau, params, 'long'), None,
                                     {'w': w, 'tau': tau}))
            disorder.append(effective_disorder(w, tau, 0.0, math.inf))
    else:
        raise ConfigurationError('Give --system FILE W TAU (repeatable) or --synthetic.')

    collapsed = collapse_transform(curves, disorder)
    summary = []
    for i, (curve, effective) in enumerate(zip(collapsed, disorder)):
        run.emit('collapsed_%d.csv' % i, write_curve, curve)
        summary.append({'index': i, 'w_e': effective.w_e, 'tau_e': effective.tau_e, 'wtau_e': effective.timescale})
    run.emit('collapse_systems.csv', write_table, summary, ('index', 'w_e', 'tau_e', 'wtau_e'))

    reach = min(c.times[-1] for c in collapsed)
    before = collapse_spread(curves, np.linspace(0, min(c.times[-1] for c in curves), 200))
    after = collapse_spread(collapsed, np.linspace(0, reach, 200))
    run.emit('collapse_spread.json', write_json, {'spread_before': before, 'spread_after': after})
    run.emit_svg('collapse.svg', {str(i): (c.times, c.values) for i, c in enumerate(collapsed)},
                 xlabel='t / (τ_e W_e)')
    print('RMS spread %.4g before and %.4g after rescaling' % (before, after))


def cmd_density(run: Run):
    args, config = run.args, run.config
    curve = read_curve(args.xy4)
    separations = _floats(args.separations)
    n = args.realizations or config.DENSITY_REALIZATIONS
    with bootstrap.open_cache(config, 'density') as cache:
        result = extract_density(curve, args.w, args.tau, separations, n, args.seed, args.omega_l,
                                 config.DENSITY_NEIGHBORS, config.THREADS, cache, args.dt,
                                 config.ENSEMBLE_MIN_RADIUS)
    run.emit('density.json', write_json, result.to_json())
    print(render_fit_summary(result, 'Surface spin density'), end='')


def cmd_depth(run: Run):
    args, config = run.args, run.config
    if (args.brms is None) == (args.w is None):
        raise ConfigurationError('Give exactly one of --brms (G) or --w (rad/us).')
    brms = args.brms if args.brms is not None else args.w / run.constants.gamma_e
    depth = depth_from_brms(brms, LayerKind(args.geometry), args.proton_density, Component(args.component),
                            args.spin_quantum, run.constants, config.DEPTH_MAX)
    run.emit('depth.json', write_json, {'brms': brms, 'depth': depth, 'geometry': args.geometry,
                                        'component': args.component, 'proton_density': args.proton_density,
                                        'units': {'brms': 'G', 'depth': 'nm'}})
    print('B_rms = %.4g G -> depth %.4g nm (%s)' % (brms, depth, args.geometry))


def cmd_t1rho(run: Run):
    args, config = run.args, run.config
    if not 0 < args.omega_min < args.omega_max:
        raise DomainError('Need 0 < omega-min < omega-max.')
    omegas = np.geomspace(args.omega_min, args.omega_max, args.points)
    rates = t1rho_rate(omegas, _noise(args), config.T1RHO_PREFACTOR, run.constants)
    rows = [{'omega': o, 'rate': r, 't1rho': 1 / r} for o, r in zip(map(float, omegas), map(float, rates))]
    run.emit('t1rho.csv', write_table, rows, ('omega', 'rate', 't1rho'))
    run.emit_svg('t1rho.svg', {'rate': (omegas, rates)}, xlabel='Ω (rad/μs)', ylabel='Γ (1/μs)')
    print('T1rho from %.4g to %.4g us over %d drive strengths' % (1 / rates.max(), 1 / rates.min(), len(rows)))


def _physical(parser, w=True):
    if w:
        parser.add_argument('--w', type=float, default=4.40, help='disorder width W in rad/us (default: 4.40)')
    parser.add_argument('--tau', type=float, default=14.6, help='correlation time in us (default: 14.6)')
    parser.add_argument('--omega-l', type=float, default=DEFAULT_OMEGA_L,
                        help='proton Larmor frequency in rad/us (default: %.4g, 730 G)' % DEFAULT_OMEGA_L)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', default=None, help='path of a config.py (see config-template.py)')
    common.add_argument('-o', '--out', default=None,
                        help='output directory (default: OUTPUT_DIR, then $%s, then the working directory)'
                             % bootstrap.OUTPUT_DIR_ENV)
    common.add_argument('--seed', type=int, default=0, help='seed of every random draw (default: 0)')
    common.add_argument('--realizations', type=int, default=None, help='disorder realizations to average')
    common.add_argument('--threads', type=int, default=None, help='worker threads (overrides THREADS)')
    common.add_argument('--svg', action='store_true', help='also write minimal SVG plots')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')

    parser = argparse.ArgumentParser(prog='surfspin', description='Surface spin relaxation toolkit.')
    parser.add_argument('--version', action='version', version='surfspin version {}'.format(VERSION))
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    p = commands.add_parser('predict', parents=[common], help='closed form and numeric decay curves')
    p.add_argument('--seq', required=True, help='Ramsey, Echo, XY4, MREV8 or FreeDecay')
    _physical(p)
    p.add_argument('--t2', type=float, default=math.inf, help='dipolar T2 in us (default: none)')
    p.add_argument('--tmax', type=float, default=5.0)
    p.add_argument('--points', type=int, default=101)
    p.add_argument('--detuning', type=float, default=0.0, help='Ramsey detuning in rad/us')
    p.add_argument('--pi-time', type=float, default=0.0, help='π pulse length in us')
    p.add_argument('--no-numeric', action='store_true', help='skip the filter function integration')
    p.set_defaults(handler=cmd_predict)

    p = commands.add_parser('simulate', parents=[common], help='exact cluster simulation')
    p.add_argument('--observable', default='echo', help='sz, spinlock or a sequence (Ramsey, Echo, XY4, MREV8)')
    p.add_argument('--n-spins', type=int, default=4, help='cluster size including the central spin')
    p.add_argument('--separation', type=float, default=8.4, help='mean spin separation in nm')
    _physical(p)
    p.add_argument('--omega', type=float, default=0.0, help='spin lock drive in rad/us')
    p.add_argument('--detuning', type=float, default=0.0)
    p.add_argument('--pi-time', type=float, default=0.0)
    p.add_argument('--tmax', type=float, default=5.0)
    p.add_argument('--points', type=int, default=51)
    p.add_argument('--dt', type=float, default=None, help='trajectory step (default: resolution limit)')
    p.add_argument('--no-flip-flop', action='store_true')
    p.add_argument('--no-larmor', action='store_true')
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser('hopping', parents=[common], help='survival curves and T_z predictions')
    _physical(p)
    p.add_argument('--j1', type=float, default=0.0, help='interaction disorder J1 in rad/us')
    p.add_argument('--separation', type=float, default=8.4)
    p.add_argument('--t2', type=float, default=None, help='T2 in us, reports T_z/T2')
    p.add_argument('--tmax', type=float, default=None, help='default: 100 tau')
    p.add_argument('--points', type=int, default=201)
    p.add_argument('--form', choices=('offset', 'long'), default='offset')
    p.add_argument('--integral', action='store_true', help='also evaluate the radial integral')
    p.add_argument('--scan-wtau', action='store_true', help='tabulate T_z and T_1/e over a W, tau grid')
    p.add_argument('--ws', default='2,3,4,5,6')
    p.add_argument('--taus', default='5,10,15,20,30')
    p.set_defaults(handler=cmd_hopping)

    p = commands.add_parser('fit', parents=[common], help='joint or stretched exponential fits')
    p.add_argument('--joint', action='store_true', help='fit Ramsey, echo, XY-4 and MREV-8 together')
    for name in ('ramsey', 'echo', 'xy4', 'mrev8'):
        p.add_argument('--%s' % name, default=None, help='%s curve CSV' % name)
    p.add_argument('--omega-l', type=float, default=DEFAULT_OMEGA_L)
    p.add_argument('--detuning', type=float, default=None, help='initial Ramsey detuning in rad/us')
    p.add_argument('--curve', default=None, help='curve CSV for a stretched exponential fit')
    p.add_argument('--power', type=float, default=None, help='fixed stretch power')
    p.set_defaults(handler=cmd_fit)

    p = commands.add_parser('collapse', parents=[common], help='rescale curves by tau_e W_e')
    p.add_argument('--system', nargs=3, action='append', metavar=('FILE', 'W', 'TAU'))
    p.add_argument('--synthetic', action='store_true', help='seven closed form systems')
    p.add_argument('--j1', type=float, default=0.0)
    p.add_argument('--separation', type=float, default=8.4)
    p.add_argument('--points', type=int, default=301)
    p.set_defaults(handler=cmd_collapse)

    p = commands.add_parser('density', parents=[common], help='surface spin density from an XY-4 curve')
    p.add_argument('--xy4', required=True)
    _physical(p)
    p.add_argument('--separations', default='5,6.5,8.4,11,14', help='nm')
    p.add_argument('--dt', type=float, default=None)
    p.set_defaults(handler=cmd_density)

    p = commands.add_parser('depth', parents=[common], help='depth from the proton rms field')
    p.add_argument('--brms', type=float, default=None, help='G')
    p.add_argument('--w', type=float, default=None, help='rad/us')
    p.add_argument('--geometry', choices=[k.value for k in LayerKind], default=LayerKind.HalfSpace.value)
    p.add_argument('--component', choices=[c.value for c in Component], default=Component.Longitudinal.value)
    p.add_argument('--proton-density', type=float, required=True, help='nm^-3 (HalfSpace) or nm^-2 (TwoDLayer)')
    p.add_argument('--spin-quantum', type=float, default=0.5)
    p.set_defaults(handler=cmd_depth)

    p = commands.add_parser('t1rho', parents=[common], help='spin lock relaxation rate against drive')
    _physical(p)
    p.add_argument('--omega-min', type=float, default=0.1)
    p.add_argument('--omega-max', type=float, default=100.0)
    p.add_argument('--points', type=int, default=60)
    p.set_defaults(handler=cmd_t1rho)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        config = bootstrap.get_config(args.config)
        bootstrap.apply_overrides(config, {'THREADS': args.threads,
                                           'LOG_LEVEL': logging.DEBUG if args.verbose else None})
        bootstrap.setup_logging(config)
        run = Run(args, config)
        if not path.isdir(run.out_dir):
            os.makedirs(run.out_dir)
        if not os.access(run.out_dir, os.W_OK):
            raise ConfigurationError("The output directory '%s' is not writable." % run.out_dir)
        log.info("Running '%s' into %s" % (args.command, run.out_dir))
        args.handler(run)
        arguments = {k: v for k, v in vars(args).items() if k != 'handler'}
        write_manifest(run.out_dir, args.command, {'settings': bootstrap.resolved_config(config),
                                                   'arguments': arguments}, args.seed, run.files, argv)
    except SurfSpinError as e:
        sys.stderr.write('surfspin %s: %s\n' % (args.command, e))
        return exit_code_for(e)
    except OSError as e:
        sys.stderr.write('surfspin %s: %s\n' % (args.command, e))
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
