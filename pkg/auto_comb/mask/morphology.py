import math
import numpy as np
from scipy import ndimage

from auto_comb.exceptions import ParameterError
from auto_comb.volume import Volume3D, gaussian_smooth


def ball_structure(radius_vox):
    '''All integer offsets o with |o| <= radius_vox, as a boolean cube.'''
    r = int(math.floor(radius_vox))
    grid = np.arange(-r, r + 1)
    ox, oy, oz = np.meshgrid(grid, grid, grid, indexing='ij')
    return (ox * ox + oy * oy + oz * oz) <= radius_vox * radius_vox + 1e-9


def dilate(mask, radius_vox):
    if radius_vox < 0:
        raise ParameterError("Dilation radius must be >= 0, got {}".format(radius_vox))
    if radius_vox < 1 or mask.is_empty():
        return mask.with_data(mask.data.copy())
    out = ndimage.binary_dilation(mask.data, structure=ball_structure(radius_vox))
    return mask.with_data(out)


def merge(masks):
    masks = list(masks)
    if len(masks) == 0:
        raise ParameterError("merge needs at least one mask")
    ref = masks[0]
    for i, m in enumerate(masks[1:], start=1):
        ref.check_aligned(m, what='mask #{}'.format(i))
    return ref.with_data(np.logical_or.reduce([m.data for m in masks]))


def subtract(mask, other):
    mask.check_aligned(other, what='subtracted mask')
    return mask.with_data(mask.data & ~other.data)


def apply_mask(vol, mask):
    '''Voxels outside the mask become NaN so statistics skip them.'''
    vol.check_aligned(mask, what='mask')
    return Volume3D(np.where(mask.data, vol.data, np.nan), vol.spacing, vol.affine.copy())


def removal_weight(removal, blur_sigma_mm):
    weight = Volume3D((~removal.data).astype(np.float64), removal.spacing, removal.affine.copy())
    if blur_sigma_mm > 0:
        weight = gaussian_smooth(weight, blur_sigma_mm)
    return np.clip(weight.data, 0.0, 1.0)


def remove_organs(vol, organ_masks, dilation_vox, blur_sigma_mm, fill_value):
    '''
    Blend organs out of the volume: w is 0 inside the dilated organ union and
    1 elsewhere, softened by a Gaussian of blur_sigma_mm, and the output is
    w * v + (1 - w) * fill_value. dilation_vox is one radius for all masks or
    one per mask.
    '''
    if blur_sigma_mm < 0:
        raise ParameterError("blur_sigma_mm must be >= 0, got {}".format(blur_sigma_mm))
    organ_masks = list(organ_masks)
    if len(organ_masks) == 0:
        return vol.with_data(vol.data.copy())
    radii = list(dilation_vox) if np.ndim(dilation_vox) else [dilation_vox] * len(organ_masks)
    if len(radii) != len(organ_masks):
        raise ParameterError("Got {} dilation radii for {} organ masks".format(len(radii), len(organ_masks)))
    for i, m in enumerate(organ_masks):
        vol.check_aligned(m, what='organ mask #{}'.format(i))
    removal = merge([dilate(m, r) for m, r in zip(organ_masks, radii)])
    w = removal_weight(removal, blur_sigma_mm)
    return vol.with_data(w * vol.data + (1.0 - w) * fill_value)
