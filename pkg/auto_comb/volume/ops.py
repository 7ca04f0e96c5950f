import math
import numpy as np
import torch
from scipy import ndimage

from auto_comb.exceptions import ParameterError, EmptyPopulationError
from .volume import Volume3D

# Gaussian kernels are cut at this many sigmas.
KERNEL_TRUNCATE = 4.0


def clip_rescale(vol, lo, hi):
    '''
    Clamp to [lo, hi] and shift so the floor becomes 0. Used to make every
    voxel nonnegative before Hessian filtering.
    '''
    if not lo < hi:
        raise ParameterError("clip_rescale needs lo < hi, got lo={}, hi={}".format(lo, hi))
    if not np.isfinite(vol.data).all():
        raise ParameterError("clip_rescale input contains non-finite voxels")
    return vol.with_data(np.clip(vol.data, lo, hi) - lo)


def replicate_shift(tensor, axis, offset):
    '''out[i] = tensor[clamp(i + offset)] along axis.'''
    n = tensor.shape[axis]
    idx = torch.clamp(torch.arange(n) + offset, 0, n - 1)
    return torch.index_select(tensor, axis, idx)


def smooth_array(data, sigma_mm, spacing):
    '''
    Separable Gaussian, one 1D pass per axis with sigma_mm / spacing[axis]
    voxels; edge voxels are replicated and the kernel is cut at 4 sigma.
    '''
    sigma_vox = [sigma_mm / s for s in spacing]
    return ndimage.gaussian_filter(np.asarray(data, dtype=np.float64), sigma_vox, mode='nearest',
                                   truncate=KERNEL_TRUNCATE)


def smooth_tensor(tensor, sigma_mm, spacing):
    return torch.from_numpy(smooth_array(tensor.numpy(), sigma_mm, spacing))


def gaussian_smooth(vol, sigma_mm):
    '''
    Separable Gaussian blur with a physical sigma; each axis uses
    sigma_mm / spacing[axis] voxels.
    '''
    if not sigma_mm > 0:
        raise ParameterError("gaussian_smooth needs sigma_mm > 0, got {}".format(sigma_mm))
    out = smooth_array(vol.data, float(sigma_mm), vol.spacing)
    return Volume3D(out, vol.spacing, vol.affine.copy())


def nearest_rank(values, p):
    n = values.size
    rank = int(math.ceil(round(p * n / 100.0, 9)))
    rank = min(max(rank, 1), n)
    return float(np.partition(values, rank - 1)[rank - 1])


def percentile_nonzero(prob_map, p):
    '''Nearest-rank percentile of the strictly positive voxels.'''
    if not 0 < p < 100:
        raise ParameterError("Percentile must lie in (0, 100), got {}".format(p))
    values = prob_map.data[prob_map.data > 0]
    if values.size == 0:
        raise EmptyPopulationError("percentile_nonzero: map has no nonzero voxels")
    return nearest_rank(values.astype(np.float64, copy=False), p)


def to_volume(tensor, ref):
    return Volume3D(tensor.numpy(), ref.spacing, ref.affine.copy())
