import json
import logging
import os
from dataclasses import dataclass
import numpy as np
from scipy import ndimage

from auto_comb.exceptions import ConfigError, InsufficientDataError, ParameterError
from auto_comb.volume import LabelMask, read_mask, read_nifti
from .morphology import dilate, merge, subtract

logger = logging.getLogger(__name__)

BOWEL_FAMILY = ('duodenum', 'small_bowel', 'colon')
BOWEL_DILATION_VOX = 2
ORGAN_DILATION_VOX = 4


def dilation_radius(name, radii=None):
    '''Explicit entry in radii wins; bowel-family organs default to 2 voxels, others to 4.'''
    if radii and name in radii:
        return float(radii[name])
    return float(BOWEL_DILATION_VOX if name in BOWEL_FAMILY else ORGAN_DILATION_VOX)


def load_label_table(path):
    try:
        with open(path, 'r') as f:
            table = json.load(f)
    except OSError as err:
        raise ConfigError("Cannot read label table {}: {}".format(path, err)) from err
    except json.JSONDecodeError as err:
        raise ConfigError("Label table {} is not valid JSON: {}".format(path, err)) from err
    if not isinstance(table, dict) or not all(isinstance(v, int) and not isinstance(v, bool) for v in table.values()):
        raise ConfigError("Label table {} must map organ names to integer labels".format(path))
    return table


def load_organ_masks(organs, reference, label_volume=None):
    '''
    Build one LabelMask per organ. Each entry of organs is either a NIfTI path
    (one binary mask per organ) or an integer label selecting voxels of
    label_volume. Every mask must share the reference geometry.
    '''
    masks = dict()
    labels = None
    for name, source in organs.items():
        if isinstance(source, (int, np.integer)) and not isinstance(source, bool):
            if label_volume is None:
                raise ConfigError("Organ '{}' is given as label {} but no label volume was supplied".format(name, source))
            if labels is None:
                labels = read_nifti(label_volume) if isinstance(label_volume, (str, os.PathLike)) else label_volume
                reference.check_aligned(labels, what='label volume')
            mask = LabelMask(np.rint(labels.data) == int(source), reference.spacing, reference.affine.copy())
        else:
            mask = read_mask(source)
            reference.check_aligned(mask, what="organ mask '{}'".format(name))
        logger.debug("Organ %s: %d voxels", name, mask.count)
        masks[name] = mask
    return masks


def body_mask(ct, threshold_hu=-500.0):
    '''
    Largest connected component of voxels above threshold_hu with internal
    cavities filled, the patient body hull on an abdominal CT.
    '''
    fg = ct.data > threshold_hu
    labels, num = ndimage.label(fg, structure=ndimage.generate_binary_structure(3, 1))
    if num == 0:
        return LabelMask.empty_like(ct)
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    body = labels == int(np.argmax(sizes))
    return ct.as_mask(ndimage.binary_fill_holes(body))


@dataclass
class IntestinePrep:
    intestine: LabelMask
    removal: LabelMask
    analysis: LabelMask
    exclusion: LabelMask


def prepare_masks(ct, organ_masks, intestine_names, radii=None, body_threshold_hu=-500.0, analysis_mask=None):
    '''
    intestine = merge(dilated bowel organs) - merge(dilated other organs).
    The removal mask is the union of dilated non-intestine organs, the
    analysis mask is the body hull minus removal, and the exclusion mask is
    removal plus everything outside the body.
    '''
    missing = [n for n in intestine_names if n not in organ_masks]
    if missing:
        raise ConfigError("Intestine organs missing from the organ table: {}".format(', '.join(missing)))
    if len(intestine_names) == 0:
        raise ParameterError("At least one intestine organ name is required")

    intestine = merge([dilate(organ_masks[n], dilation_radius(n, radii)) for n in intestine_names])
    others = [n for n in organ_masks if n not in intestine_names]
    if others:
        removal = merge([dilate(organ_masks[n], dilation_radius(n, radii)) for n in others])
        intestine = subtract(intestine, removal)
    else:
        removal = LabelMask.empty_like(ct)
    if intestine.is_empty():
        raise InsufficientDataError("Intestine mask is empty after removing adjacent organs")

    body = body_mask(ct, body_threshold_hu) if analysis_mask is None else analysis_mask
    ct.check_aligned(body, what='analysis mask')
    analysis = subtract(body, removal)
    exclusion = merge([removal, body.with_data(~body.data)])
    logger.info("Intestine %d voxels, removal %d, analysis %d", intestine.count, removal.count, analysis.count)
    return IntestinePrep(intestine=intestine, removal=removal, analysis=analysis, exclusion=exclusion)
