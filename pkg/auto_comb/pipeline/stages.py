import csv
import json
import logging
import os
from dataclasses import dataclass
import numpy as np

from auto_comb.exceptions import NiftiIOError
from auto_comb.volume import clip_rescale, read_mask, read_nifti, write_nifti
from auto_comb.mask import apply_mask, load_organ_masks, prepare_masks, remove_organs
from auto_comb.wall import (build_histogram, bic_scan, component_roles, fit_gmm, wall_mask,
                            wall_threshold, write_histogram_csv)
from auto_comb.vesselness import vesselness_multiscale
from auto_comb.enhance import enhance
from auto_comb.fusion import auto_roi, comb_map, proximity_map, score_regions
from .hyperparameter import ARTIFACT_NAMES

logger = logging.getLogger(__name__)

FLOAT_MAP = np.float32
MASK = np.uint8


def artifact_path(out_dir, name):
    return os.path.join(out_dir, ARTIFACT_NAMES[name])


def write_json(obj, path):
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'w') as f:
            json.dump(obj, f, indent=2)
    except OSError as err:
        raise NiftiIOError("Cannot write {}: {}".format(path, err)) from err
    logger.debug("Wrote %s", path)
    return path


def write_bic_csv(curve, path):
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(['k', 'bic'])
            for k, value in curve.rows():
                writer.writerow([k, repr(float(value))])
    except OSError as err:
        raise NiftiIOError("Cannot write {}: {}".format(path, err)) from err
    return path


"""
Mask preparation
"""
@dataclass
class PrepResult:
    intestine: object
    intestine_volume: object
    removal: object
    analysis: object
    exclusion: object


def prep_stage(ct, organ_masks, cfg):
    inp = cfg['input']
    analysis = read_mask(inp['analysis_mask']) if inp['analysis_mask'] else None
    masks = prepare_masks(ct, organ_masks, inp['intestine'], radii=inp['dilation_vox'],
                          body_threshold_hu=cfg['organ_removal']['body_threshold_hu'], analysis_mask=analysis)
    return PrepResult(intestine=masks.intestine, intestine_volume=apply_mask(ct, masks.intestine),
                      removal=masks.removal, analysis=masks.analysis, exclusion=masks.exclusion)


def write_prep(result, out_dir):
    write_nifti(result.intestine, artifact_path(out_dir, 'intestine_mask'), MASK)
    write_nifti(result.removal, artifact_path(out_dir, 'removal_mask'), MASK)
    write_nifti(result.exclusion, artifact_path(out_dir, 'exclusion_mask'), MASK)
    write_nifti(result.analysis, artifact_path(out_dir, 'analysis_mask'), MASK)
    return write_nifti(result.intestine_volume, artifact_path(out_dir, 'intestine_volume'), FLOAT_MAP)


def run_prep(ct_path, cfg, out_dir):
    ct = read_nifti(ct_path)
    organs = load_organ_masks(cfg.organ_sources(), ct, label_volume=cfg['input']['label_volume'])
    result = prep_stage(ct, organs, cfg)
    return result, write_prep(result, out_dir)


"""
Wall estimation
"""
@dataclass
class WallResult:
    histogram: object
    model: object
    roles: list
    curve: object
    threshold: object
    wall: object


def wall_stage(intestine_volume, cfg):
    g = cfg['gmm']
    fit_kwargs = dict(tol=g['tol'], max_iter=g['max_iter'], restarts=g['restarts'])
    hist = build_histogram(intestine_volume, g['bin_width'], g['min_voxels'])
    curve = bic_scan(hist, g['k_min'], g['k_max'], g['seed'], cfg.bic_penalty, **fit_kwargs)
    if g['k_min'] <= g['k'] <= g['k_max']:
        model = curve.models[g['k'] - g['k_min']]
    else:
        model = fit_gmm(hist, k=g['k'], seed=g['seed'], **fit_kwargs)
    threshold = wall_threshold(model)
    wall = wall_mask(intestine_volume, threshold.hu)
    logger.info("Wall mask: %d voxels at >= %.2f HU", wall.count, threshold.hu)
    return WallResult(hist, model, component_roles(model), curve, threshold, wall)


def write_wall(result, out_dir):
    model = result.model.to_dict()
    model['roles'] = result.roles
    model['bic'] = result.curve.bic_values[result.curve.ks.index(result.model.k)] \
        if result.model.k in result.curve.ks else None
    model['bic_penalty'] = result.curve.penalty.name.lower()
    write_json(model, artifact_path(out_dir, 'gmm'))
    write_bic_csv(result.curve, artifact_path(out_dir, 'bic'))
    write_json(result.threshold.to_dict(), artifact_path(out_dir, 'threshold'))
    write_histogram_csv(result.histogram, artifact_path(out_dir, 'histogram'), result.model)
    return write_nifti(result.wall, artifact_path(out_dir, 'wall_mask'), MASK)


def run_wall(intestine_volume_path, cfg, out_dir):
    result = wall_stage(read_nifti(intestine_volume_path), cfg)
    return result, write_wall(result, out_dir)


"""
Organ removal and vesselness
"""
@dataclass
class VesselnessResult:
    organ_removed: object
    vessel: object
    per_scale: list


def vesselness_stage(ct, removal, analysis, cfg):
    removal_cfg = cfg['organ_removal']
    removed = remove_organs(ct, [removal], 0, removal_cfg['blur_sigma_mm'], removal_cfg['fill_value'])
    rescaled = clip_rescale(removed, cfg['hu']['lo'], cfg['hu']['hi'])
    ves = cfg['vesselness']
    dump = cfg['output']['dump_scales']
    out = vesselness_multiscale(rescaled, ves['scales_mm'], ves['tau_cut'], analysis_mask=analysis, dump_scales=dump)
    vessel, per_scale = out if dump else (out, [])
    return VesselnessResult(removed, vessel, per_scale)


def write_vesselness(result, out_path, scales_mm=()):
    out_dir = os.path.dirname(out_path)
    if result.organ_removed is not None:
        write_nifti(result.organ_removed, os.path.join(out_dir, ARTIFACT_NAMES['organ_removed']), FLOAT_MAP)
    for scale, vol in zip(scales_mm, result.per_scale):
        write_nifti(vol, os.path.join(out_dir, 'vesselness_{:g}mm.nii.gz'.format(scale)), FLOAT_MAP)
    return write_nifti(result.vessel, out_path, FLOAT_MAP)


def run_vesselness(ct_path, removal_path, analysis_path, cfg, out_path):
    ct = read_nifti(ct_path)
    removal = read_mask(removal_path)
    analysis = read_mask(analysis_path) if analysis_path else None
    ct.check_aligned(removal, what='removal mask')
    result = vesselness_stage(ct, removal, analysis, cfg)
    return result, write_vesselness(result, out_path, cfg['vesselness']['scales_mm'])


"""
Enhancement
"""
def enhance_stage(vessel, exclusion, cfg):
    return enhance(vessel, cfg.enhance_params, exclusion)


def run_enhance(vessel_path, exclusion_path, cfg, out_path):
    vessel = read_nifti(vessel_path).as_probability()
    exclusion = read_mask(exclusion_path) if exclusion_path else None
    enhanced = enhance_stage(vessel, exclusion, cfg)
    return enhanced, write_nifti(enhanced, out_path, FLOAT_MAP)


"""
Proximity, fusion and scoring
"""
@dataclass
class FusionResult:
    proximity: object
    comb: object
    roi: object
    report: object


def fuse_stage(enhanced, wall, cfg, roi=None):
    params = cfg.fusion_params
    enhanced.check_aligned(wall, what='wall mask')
    proximity = proximity_map(wall, params.sigma_wall_mm)
    comb = comb_map(enhanced, proximity)
    source = 'user'
    if roi is None:
        roi = auto_roi(wall, params.roi_distance_mm)
        source = 'auto'
    report = score_regions(comb, roi, params, proximity, roi_source=source)
    logger.info("Comb-sign verdict: %s (best region score %.5f, theta %.3f)",
                report.verdict, report.score, params.theta)
    return FusionResult(proximity, comb, roi, report)


def write_fusion(result, out_dir, dump_proximity=True):
    if dump_proximity:
        write_nifti(result.proximity, artifact_path(out_dir, 'proximity'), FLOAT_MAP)
    write_nifti(result.comb, artifact_path(out_dir, 'comb'), FLOAT_MAP)
    return result.report.write_json(artifact_path(out_dir, 'report'))


def run_fuse(enhanced_path, wall_path, roi_path, cfg, out_dir, dump_proximity=True):
    enhanced = read_nifti(enhanced_path).as_probability()
    wall = read_mask(wall_path)
    roi = read_nifti(roi_path) if roi_path else None
    result = fuse_stage(enhanced, wall, cfg, roi)
    return result, write_fusion(result, out_dir, dump_proximity)
