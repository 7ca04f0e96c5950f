import logging
import numpy as np
from scipy import ndimage

from auto_comb.exceptions import EmptyPopulationError, ParameterError
from auto_comb.volume import gaussian_smooth

logger = logging.getLogger(__name__)


def proximity_raw(wall, sigma_wall_mm):
    '''Wall mask convolved with a normalised Gaussian, before any rescaling.'''
    if not sigma_wall_mm > 0:
        raise ParameterError("sigma_wall_mm must be > 0, got {}".format(sigma_wall_mm))
    if wall.is_empty():
        raise EmptyPopulationError("Wall mask is empty; no proximity can be computed")
    return gaussian_smooth(wall, sigma_wall_mm)


def proximity_map(wall, sigma_wall_mm):
    '''
    Probability of being near the enhanced wall. The convolution is divided by
    its global maximum, so the peak is exactly 1 and thick wall stays above
    thin wall at equal distance.
    '''
    raw = proximity_raw(wall, sigma_wall_mm)
    peak = float(raw.data.max())
    logger.debug("Proximity peak before normalisation: %.6f", peak)
    return raw.as_probability(np.clip(raw.data / peak, 0.0, 1.0))


def comb_map(vessel, proximity):
    vessel.check_aligned(proximity, what='proximity map')
    return vessel.as_probability(vessel.data * proximity.data)


def auto_roi(wall, roi_distance_mm):
    '''
    Non-wall voxels within roi_distance_mm of the wall (Euclidean, physical
    units) together with the face-adjacent shell of the wall.
    '''
    if not roi_distance_mm > 0:
        raise ParameterError("roi_distance_mm must be > 0, got {}".format(roi_distance_mm))
    if wall.is_empty():
        raise EmptyPopulationError("Wall mask is empty; no automatic ROI can be built")
    dist = ndimage.distance_transform_edt(~wall.data, sampling=wall.spacing)
    shell = ndimage.binary_dilation(wall.data, structure=ndimage.generate_binary_structure(3, 1))
    roi = ((dist <= roi_distance_mm) | shell) & ~wall.data
    return wall.with_data(roi)
