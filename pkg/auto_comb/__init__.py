from .exceptions import *
from .pipeline import PipelineConfig, run_pipeline, make_phantom, PhantomSpec
from .pipeline.stages import enhance_stage, fuse_stage, prep_stage, vesselness_stage, wall_stage
from .pipeline.graph import build_dot
from .volume import read_nifti
from .mask import load_organ_masks
import os

class AutoComb:
    def __init__(self, config=None, ct=None, organ_masks=None):
        if isinstance(config, PipelineConfig):
            self._cfg = config
        elif isinstance(config, (str, os.PathLike)):
            self._cfg = PipelineConfig.load(config)
        else:
            self._cfg = PipelineConfig(config)
        self._ct = ct
        self._organ_masks = organ_masks
        self._prep = None
        self._wall = None
        self._vesselness = None
        self._enhanced = None
        self._fusion = None
        self.report = None

    @property
    def config(self):
        return self._cfg

    def _load_inputs(self):
        if self._ct is None:
            if self._cfg['input']['ct'] is None:
                raise ConfigError("No CT volume given and input.ct is not set")
            self._ct = read_nifti(self._cfg['input']['ct'])
        if self._organ_masks is None:
            self._organ_masks = load_organ_masks(self._cfg.organ_sources(), self._ct,
                                                 label_volume=self._cfg['input']['label_volume'])

    def prep(self):
        self._load_inputs()
        self._prep = prep_stage(self._ct, self._organ_masks, self._cfg)
        self._prep.intestine_volume = self._prep.intestine_volume.float32_handoff()
        return self._prep

    def wall(self):
        if self._prep is None:
            self.prep()
        self._wall = wall_stage(self._prep.intestine_volume, self._cfg)
        return self._wall

    def vesselness(self):
        if self._prep is None:
            self.prep()
        self._vesselness = vesselness_stage(self._ct, self._prep.removal, self._prep.analysis, self._cfg)
        return self._vesselness

    def enhance(self):
        if self._vesselness is None:
            self.vesselness()
        vessel = self._vesselness.vessel.float32_handoff()
        self._enhanced = enhance_stage(vessel, self._prep.exclusion, self._cfg).float32_handoff()
        return self._enhanced

    def fuse(self, roi=None):
        if self._wall is None:
            self.wall()
        if self._enhanced is None:
            self.enhance()
        if roi is None and self._cfg['input']['roi'] is not None:
            roi = read_nifti(self._cfg['input']['roi'])
        self._fusion = fuse_stage(self._enhanced, self._wall.wall, self._cfg, roi)
        self.report = self._fusion.report
        return self.report

    def run(self):
        self.report = run_pipeline(self._cfg)
        return self.report

    def visualize(self, out_dir=None, view=False, vertical=True, theme='basic'):
        self.dot = build_dot(theme=theme, vertical=vertical, out_dir=self._cfg.out_dir)
        return self.dot.render(os.path.join(out_dir if out_dir is not None else './', 'autocomb_pipeline'), view=view)
