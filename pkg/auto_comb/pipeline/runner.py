import logging
import os
import time

from auto_comb.exceptions import AutoCombError, StageError
from auto_comb.volume import read_nifti, write_nifti
from auto_comb.mask import load_organ_masks
from .config import PipelineConfig
from .hyperparameter import ARTIFACT_NAMES
from .stages import (enhance_stage, fuse_stage, prep_stage, vesselness_stage, wall_stage, write_fusion,
                     write_prep, write_vesselness, write_wall, FLOAT_MAP)

logger = logging.getLogger(__name__)

STAGES = ('prep', 'wall', 'vesselness', 'enhance', 'fuse')


class _StageTracker:
    def __init__(self):
        self.last_artifact = None

    def run(self, stage, fn, *args, **kwargs):
        start = time.time()
        logger.info("Stage %s started", stage)
        try:
            out = fn(*args, **kwargs)
        except AutoCombError as err:
            logger.error("Stage %s failed: %s", stage, err)
            raise StageError(stage, err, self.last_artifact) from err
        logger.info("Stage %s finished in %.2fs", stage, time.time() - start)
        return out

    def wrote(self, path):
        self.last_artifact = path
        logger.info("Wrote %s", path)
        return path


def run_pipeline(config):
    '''
    Mask preparation, wall estimation, organ removal with vesselness,
    enhancement, then proximity fusion and scoring. Floating-point maps cross
    stage boundaries rounded to float32, exactly as when the stages are run one
    by one through NIfTI files. Returns the CombReport; the comb map and the
    report are always written, intermediates only when dump_intermediates.
    '''
    cfg = config if isinstance(config, PipelineConfig) else PipelineConfig.load(config)
    out_dir = cfg.out_dir
    dump = cfg['output']['dump_intermediates']
    os.makedirs(out_dir, exist_ok=True)
    tracker = _StageTracker()

    def _load():
        ct = read_nifti(cfg['input']['ct'])
        organs = load_organ_masks(cfg.organ_sources(), ct, label_volume=cfg['input']['label_volume'])
        return ct, organs

    ct, organs = tracker.run('prep', _load)
    prep = tracker.run('prep', prep_stage, ct, organs, cfg)
    prep.intestine_volume = prep.intestine_volume.float32_handoff()
    if dump:
        tracker.wrote(tracker.run('prep', write_prep, prep, out_dir))

    wall = tracker.run('wall', wall_stage, prep.intestine_volume, cfg)
    if dump:
        tracker.wrote(tracker.run('wall', write_wall, wall, out_dir))

    ves = tracker.run('vesselness', vesselness_stage, ct, prep.removal, prep.analysis, cfg)
    vessel = ves.vessel.float32_handoff()
    if dump:
        path = os.path.join(out_dir, ARTIFACT_NAMES['vesselness'])
        tracker.wrote(tracker.run('vesselness', write_vesselness, ves, path, cfg['vesselness']['scales_mm']))

    enhanced = tracker.run('enhance', enhance_stage, vessel, prep.exclusion, cfg).float32_handoff()
    if dump:
        path = os.path.join(out_dir, ARTIFACT_NAMES['enhanced'])
        tracker.wrote(tracker.run('enhance', write_nifti, enhanced, path, FLOAT_MAP))

    roi_path = cfg['input']['roi']
    roi = tracker.run('fuse', read_nifti, roi_path) if roi_path else None
    fusion = tracker.run('fuse', fuse_stage, enhanced, wall.wall, cfg, roi)
    tracker.wrote(tracker.run('fuse', write_fusion, fusion, out_dir, dump_proximity=dump))
    return fusion.report
