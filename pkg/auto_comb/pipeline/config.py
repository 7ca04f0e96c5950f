import copy
import json
import logging
import os
import yaml

from auto_comb.exceptions import ConfigError, ParameterError
from auto_comb.enhance import EnhanceParams
from auto_comb.fusion import FusionParams
from auto_comb.mask import load_label_table
from auto_comb.wall import BicPenalty
from .hyperparameter import DEFAULT_PIPELINE_PARAMS, OPEN_TABLES, PATH_KEYS

logger = logging.getLogger(__name__)


def deep_merge(defaults, override, prefix=()):
    '''Merge override into a copy of defaults, rejecting keys defaults does not know.'''
    merged = copy.deepcopy(defaults)
    if not isinstance(override, dict):
        raise ConfigError("Config section '{}' must be a mapping".format('.'.join(prefix) or '<root>'))
    for key, value in override.items():
        path = prefix + (key,)
        if key not in defaults:
            raise ConfigError("Unknown config key '{}'".format('.'.join(path)))
        if isinstance(defaults[key], dict) and path not in OPEN_TABLES:
            merged[key] = deep_merge(defaults[key], value, path)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path):
    path = os.fspath(path)
    try:
        with open(path, 'r') as f:
            if path.endswith(('.yml', '.yaml')):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except OSError as err:
        raise ConfigError("Cannot read config {}: {}".format(path, err)) from err
    except (json.JSONDecodeError, yaml.YAMLError) as err:
        raise ConfigError("Config {} is malformed: {}".format(path, err)) from err
    return {} if data is None else data


class PipelineConfig:
    '''
    Every tunable of the pipeline. Values not given fall back to
    DEFAULT_PIPELINE_PARAMS; relative paths resolve against base_dir.
    '''
    def __init__(self, params=None, base_dir=None, check_paths=False):
        self.base_dir = os.path.abspath(base_dir if base_dir is not None else os.getcwd())
        self.params = deep_merge(DEFAULT_PIPELINE_PARAMS, params or {})
        self._resolve_paths()
        try:
            self.validate()
        except TypeError as err:
            raise ConfigError("Config value has the wrong type: {}".format(err)) from err
        if check_paths:
            self.check_paths()

    @classmethod
    def load(cls, path, check_paths=True):
        path = os.path.abspath(os.fspath(path))
        cfg = cls(read_config_file(path), base_dir=os.path.dirname(path), check_paths=check_paths)
        logger.info("Loaded config %s", path)
        return cfg

    def __getitem__(self, section):
        return self.params[section]

    def _resolve(self, value):
        if value is None or os.path.isabs(value):
            return value
        return os.path.normpath(os.path.join(self.base_dir, value))

    def _resolve_paths(self):
        for section, keys in PATH_KEYS.items():
            for key in keys:
                value = self.params[section][key]
                if value is not None and not isinstance(value, (str, os.PathLike)):
                    raise ConfigError("{}.{} must be a path, got {!r}".format(section, key, value))
                self.params[section][key] = self._resolve(None if value is None else os.fspath(value))
        organs = self.params['input']['organs']
        if not isinstance(organs, dict):
            raise ConfigError("input.organs must map organ names to mask paths or integer labels")
        for name, source in organs.items():
            if isinstance(source, bool) or not isinstance(source, (str, int)):
                raise ConfigError("input.organs.{} must be a path or an integer label, got {!r}".format(name, source))
            if isinstance(source, str):
                organs[name] = self._resolve(source)

    def validate(self):
        p = self.params
        if not p['hu']['lo'] < p['hu']['hi']:
            raise ConfigError("hu.lo must be below hu.hi, got {} and {}".format(p['hu']['lo'], p['hu']['hi']))
        radii = p['input']['dilation_vox']
        if not isinstance(radii, dict) or any(not isinstance(r, (int, float)) or r < 0 for r in radii.values()):
            raise ConfigError("input.dilation_vox must map organ names to radii >= 0")
        intestine = p['input']['intestine']
        if not isinstance(intestine, list) or len(intestine) == 0:
            raise ConfigError("input.intestine must be a nonempty list of organ names")
        if p['organ_removal']['blur_sigma_mm'] < 0:
            raise ConfigError("organ_removal.blur_sigma_mm must be >= 0")

        gmm = p['gmm']
        if int(gmm['k']) < 2:
            raise ConfigError("gmm.k must be >= 2 to place a wall threshold")
        if not gmm['bin_width'] > 0 or not gmm['tol'] > 0:
            raise ConfigError("gmm.bin_width and gmm.tol must be > 0")
        if gmm['max_iter'] < 1 or gmm['restarts'] < 1 or gmm['min_voxels'] < 1:
            raise ConfigError("gmm.max_iter, gmm.restarts and gmm.min_voxels must be >= 1")
        if not 1 <= gmm['k_min'] <= gmm['k_max']:
            raise ConfigError("gmm needs 1 <= k_min <= k_max")

        ves = p['vesselness']
        if not isinstance(ves['scales_mm'], list) or len(ves['scales_mm']) == 0 \
                or any(not s > 0 for s in ves['scales_mm']):
            raise ConfigError("vesselness.scales_mm must be a nonempty list of positive scales")
        if not 0 < ves['tau_cut'] <= 1:
            raise ConfigError("vesselness.tau_cut must lie in (0, 1]")

        try:
            self.bic_penalty
            self.enhance_params
            self.fusion_params
        except ParameterError as err:
            raise ConfigError(str(err)) from err

    def check_paths(self):
        inp = self.params['input']
        if inp['ct'] is None:
            raise ConfigError("input.ct is required")
        files = [inp['ct']] + [s for s in inp['organs'].values() if isinstance(s, str)]
        files += [inp[k] for k in ('label_volume', 'label_table', 'analysis_mask', 'roi') if inp[k] is not None]
        for f in files:
            if not os.path.isfile(f):
                raise ConfigError("Input file does not exist: {}".format(f))
        if any(isinstance(s, int) for s in inp['organs'].values()) and inp['label_volume'] is None:
            raise ConfigError("Integer organ labels need input.label_volume")

    @property
    def bic_penalty(self):
        return BicPenalty.parse(self.params['gmm']['bic_penalty'])

    @property
    def enhance_params(self):
        e = self.params['enhance']
        return EnhanceParams(K=e['K'], lambda_schedule=e['lambda_schedule'],
                             tau_percent=e['tau_percent'], min_floor=e['min_floor'])

    @property
    def fusion_params(self):
        f = self.params['fusion']
        return FusionParams(sigma_wall_mm=f['sigma_wall_mm'], roi_distance_mm=f['roi_distance_mm'], theta=f['theta'])

    @property
    def out_dir(self):
        return self.params['output']['dir']

    def to_dict(self):
        return copy.deepcopy(self.params)

    def organ_sources(self):
        '''Organ name to mask path or label, with label-table entries filling the gaps.'''
        inp = self.params['input']
        sources = dict()
        if inp['label_table'] is not None:
            sources.update(load_label_table(inp['label_table']))
        sources.update(inp['organs'])
        return sources
