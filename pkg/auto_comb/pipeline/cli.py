import argparse
import logging
import os
import sys

from auto_comb.exceptions import AutoCombError
from auto_comb.volume import read_nifti
from auto_comb.wall import bic_scan_pooled, build_histogram
from .config import PipelineConfig, read_config_file
from .phantom import PhantomSpec, make_phantom
from .runner import run_pipeline
from .stages import run_enhance, run_fuse, run_prep, run_vesselness, run_wall, write_bic_csv

logger = logging.getLogger('auto_comb')

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'


def _floats(text):
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got '{}'".format(text))


def _organ(text):
    name, sep, path = text.partition('=')
    if not sep or not name or not path:
        raise argparse.ArgumentTypeError("expected NAME=PATH, got '{}'".format(text))
    return name, path


def _set(params, section, key, value):
    if value is not None:
        params.setdefault(section, {})[key] = value


def build_config(args, overrides):
    '''Config file named by --config (if any) with command-line overrides on top.'''
    params, base_dir = {}, os.getcwd()
    if getattr(args, 'config', None):
        params = read_config_file(args.config)
        base_dir = os.path.dirname(os.path.abspath(args.config))
    for (section, key), value in overrides.items():
        if value is not None:
            # command-line paths are relative to the working directory
            if isinstance(value, str) and section in ('input', 'output'):
                value = os.path.abspath(value)
            _set(params, section, key, value)
    return PipelineConfig(params, base_dir=base_dir)


def cmd_run(args):
    cfg = build_config(args, {('output', 'dir'): args.out,
                              ('output', 'dump_intermediates'): True if args.dump else None})
    cfg.check_paths()
    run_pipeline(cfg)
    return 0


def cmd_phantom(args):
    spec = PhantomSpec.load(args.spec) if args.spec else PhantomSpec()
    if args.no_vessels:
        spec.vessel_count = 0
    if args.seed is not None:
        spec.seed = args.seed
    make_phantom(spec, args.out)
    return 0


def cmd_prep(args):
    organs = dict(args.organ or [])
    cfg = build_config(args, {('input', 'label_volume'): args.label_volume,
                              ('input', 'label_table'): args.label_table,
                              ('input', 'analysis_mask'): args.analysis_mask,
                              ('input', 'intestine'): args.intestine.split(',') if args.intestine else None,
                              ('input', 'organs'): {k: os.path.abspath(v) for k, v in organs.items()} or None})
    run_prep(args.ct, cfg, args.out)
    return 0


def cmd_wall(args):
    cfg = build_config(args, {('gmm', 'k'): args.k, ('gmm', 'seed'): args.seed,
                              ('gmm', 'bin_width'): args.bin_width, ('gmm', 'bic_penalty'): args.penalty})
    run_wall(args.inp, cfg, args.out)
    return 0


def cmd_vesselness(args):
    cfg = build_config(args, {('vesselness', 'scales_mm'): args.scales, ('vesselness', 'tau_cut'): args.tau_cut,
                              ('hu', 'lo'): args.lo, ('hu', 'hi'): args.hi,
                              ('output', 'dump_scales'): True if args.dump_scales else None})
    run_vesselness(args.inp, args.removal_mask, args.analysis_mask, cfg, args.out)
    return 0


def cmd_enhance(args):
    cfg = build_config(args, {('enhance', 'K'): args.iters, ('enhance', 'lambda_schedule'): args.lam,
                              ('enhance', 'tau_percent'): args.tau_percent, ('enhance', 'min_floor'): args.floor})
    run_enhance(args.inp, args.exclude, cfg, args.out)
    return 0


def cmd_fuse(args):
    cfg = build_config(args, {('fusion', 'sigma_wall_mm'): args.sigma_wall,
                              ('fusion', 'roi_distance_mm'): args.roi_distance, ('fusion', 'theta'): args.theta})
    run_fuse(args.vessel, args.wall, args.roi, cfg, args.out, dump_proximity=not args.no_proximity)
    return 0


def cmd_bic_scan(args):
    cfg = build_config(args, {('gmm', 'k_min'): args.kmin, ('gmm', 'k_max'): args.kmax,
                              ('gmm', 'seed'): args.seed, ('gmm', 'bin_width'): args.bin_width,
                              ('gmm', 'bic_penalty'): args.penalty})
    g = cfg['gmm']
    hists = [build_histogram(read_nifti(p), g['bin_width'], g['min_voxels']) for p in args.inp]
    curve = bic_scan_pooled(hists, g['k_min'], g['k_max'], g['seed'], cfg.bic_penalty,
                            tol=g['tol'], max_iter=g['max_iter'], restarts=g['restarts'])
    write_bic_csv(curve, args.out)
    logger.info("BIC scan over %d volume(s): minimum at k=%d", len(hists), curve.best_k())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog='autocomb', description='Comb-sign detection on abdominal CT volumes.')
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings and errors only')
    sub = parser.add_subparsers(dest='command', required=True)

    def add(name, fn, help_text, config=True):
        p = sub.add_parser(name, help=help_text)
        if config:
            p.add_argument('--config', default=None, help='pipeline config (JSON or YAML) supplying defaults')
        p.set_defaults(func=fn)
        return p

    p = add('run', cmd_run, 'run the whole pipeline from a config', config=False)
    p.add_argument('--config', required=True)
    p.add_argument('--out', default=None, help='override output.dir')
    p.add_argument('--dump', action='store_true', help='write every intermediate artifact')

    p = add('phantom', cmd_phantom, 'write a synthetic phantom and a config for it', config=False)
    p.add_argument('--spec', default=None, help='phantom spec JSON')
    p.add_argument('--out', required=True)
    p.add_argument('--no-vessels', action='store_true', help='control phantom without vessels')
    p.add_argument('--seed', type=int, default=None)

    p = add('prep', cmd_prep, 'intestine, removal, exclusion and analysis masks')
    p.add_argument('--ct', required=True)
    p.add_argument('--organ', type=_organ, action='append', help='NAME=PATH, repeatable')
    p.add_argument('--label-volume', default=None)
    p.add_argument('--label-table', default=None)
    p.add_argument('--intestine', default=None, help='comma-separated intestine organ names')
    p.add_argument('--analysis-mask', default=None)
    p.add_argument('--out', required=True, help='output directory')

    p = add('wall', cmd_wall, 'GMM wall threshold and wall mask')
    p.add_argument('--in', dest='inp', required=True, help='intestine volume')
    p.add_argument('--out', required=True, help='output directory')
    p.add_argument('--k', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--bin-width', type=float, default=None)
    p.add_argument('--penalty', choices=['literal_k', 'full_params'], default=None)

    p = add('vesselness', cmd_vesselness, 'organ removal and multiscale Jerman vesselness')
    p.add_argument('--in', dest='inp', required=True, help='CT volume')
    p.add_argument('--removal-mask', required=True)
    p.add_argument('--analysis-mask', default=None)
    p.add_argument('--out', required=True, help='vesselness map')
    p.add_argument('--scales', type=_floats, default=None, help='comma-separated scales in mm')
    p.add_argument('--tau-cut', type=float, default=None)
    p.add_argument('--lo', type=float, default=None)
    p.add_argument('--hi', type=float, default=None)
    p.add_argument('--dump-scales', action='store_true')

    p = add('enhance', cmd_enhance, 'iterative neighbourhood enhancement')
    p.add_argument('--in', dest='inp', required=True, help='vesselness map')
    p.add_argument('--out', required=True, help='enhanced map')
    p.add_argument('--exclude', default=None, help='exclusion mask')
    p.add_argument('--iters', type=int, default=None)
    p.add_argument('--lambda', dest='lam', type=_floats, default=None, help='scalar or comma-separated schedule')
    p.add_argument('--tau-percent', type=float, default=None)
    p.add_argument('--floor', type=float, default=None)

    p = add('fuse', cmd_fuse, 'wall proximity, comb map and region scores')
    p.add_argument('--vessel', required=True, help='enhanced vessel map')
    p.add_argument('--wall', required=True, help='wall mask')
    p.add_argument('--roi', default=None, help='ROI mask or label volume')
    p.add_argument('--out', required=True, help='output directory')
    p.add_argument('--sigma-wall', type=float, default=None)
    p.add_argument('--roi-distance', type=float, default=None)
    p.add_argument('--theta', type=float, default=None)
    p.add_argument('--no-proximity', action='store_true', help='skip writing the proximity map')

    p = add('bic-scan', cmd_bic_scan, 'BIC curve over k, pooled across volumes')
    p.add_argument('--in', dest='inp', nargs='+', required=True, help='intestine volumes')
    p.add_argument('--out', required=True, help='CSV path')
    p.add_argument('--kmin', type=int, default=None)
    p.add_argument('--kmax', type=int, default=None)
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--bin-width', type=float, default=None)
    p.add_argument('--penalty', choices=['literal_k', 'full_params'], default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose else (logging.WARNING if args.quiet else logging.INFO)
    logging.basicConfig(stream=sys.stderr, level=level, format=LOG_FORMAT)
    try:
        return args.func(args)
    except AutoCombError as err:
        logger.error("%s", err)
        return err.exit_code


if __name__ == '__main__':
    sys.exit(main())
