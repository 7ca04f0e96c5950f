import logging
import math
import numpy as np
import torch

from auto_comb.exceptions import ParameterError, PreconditionError
from auto_comb.volume import ProbabilityMap, to_volume
from .eigen import EigenTriple, eig3_field
from .hessian import hessian_at_scale

logger = logging.getLogger(__name__)

DEFAULT_SCALES_MM = (1.0, 1.5, 2.0, 2.5)
DEFAULT_TAU_CUT = 0.5


def jerman_response(e, lambda_rho):
    '''
    Jerman vesselness for one voxel. e is either an EigenTriple straight from
    eig3_symmetric, whose l2 is flipped here for bright vessels, or an
    already-flipped l2.
    '''
    l2 = -e.l2 if isinstance(e, EigenTriple) else e
    l2, lambda_rho = float(l2), float(lambda_rho)
    if l2 <= 0.0 or lambda_rho <= 0.0:
        return 0.0
    if l2 >= lambda_rho / 2.0:
        return 1.0
    value = l2 * l2 * (lambda_rho - l2) * (3.0 / (l2 + lambda_rho)) ** 3
    return min(max(value, 0.0), 1.0)


def jerman_field(l2, lambda_rho):
    cubic = l2 * l2 * (lambda_rho - l2) * torch.pow(3.0 / (l2 + lambda_rho), 3)
    response = torch.where(l2 >= lambda_rho / 2.0, torch.ones_like(l2), cubic)
    response = torch.where((l2 <= 0) | (lambda_rho <= 0), torch.zeros_like(l2), response)
    return torch.clamp(response, 0.0, 1.0)


def regularized_lambda(l3, cap):
    '''lambda_rho: l3 above the cap, the cap where 0 < l3 <= cap, else 0.'''
    if cap <= 0.0:
        return torch.where(l3 > 0, l3, torch.zeros_like(l3))
    return torch.where(l3 > cap, l3, torch.where(l3 > 0, torch.full_like(l3, cap), torch.zeros_like(l3)))


def response_at_scale(vol, scale_mm, tau_cut, analysis=None):
    hessian = hessian_at_scale(vol, scale_mm)
    _, l2, l3 = eig3_field(*hessian.components())
    l2, l3 = -l2, -l3
    region = l3 if analysis is None else l3[analysis]
    peak = float(region.max()) if region.numel() > 0 else 0.0
    cap = tau_cut * peak if peak > 0 else 0.0
    logger.debug("Scale %.2f mm: max l3 %.4g, lambda_rho cap %.4g", scale_mm, peak, cap)
    return jerman_field(l2, regularized_lambda(l3, cap))


def vesselness_multiscale(vol, scales_mm=DEFAULT_SCALES_MM, tau_cut=DEFAULT_TAU_CUT, analysis_mask=None, dump_scales=False):
    '''
    Voxelwise maximum of the Jerman response over scales_mm. The per-scale
    lambda_rho cap is tau_cut times the largest l3 inside analysis_mask (the
    whole grid when no mask is given). The input must already be nonnegative.
    With dump_scales the per-scale maps are returned as well.
    '''
    scales_mm = [float(s) for s in scales_mm]
    if len(scales_mm) == 0:
        raise ParameterError("vesselness needs at least one scale")
    if any(not s > 0 for s in scales_mm):
        raise ParameterError("vesselness scales must be > 0 mm, got {}".format(scales_mm))
    if not 0.0 < tau_cut <= 1.0:
        raise ParameterError("tau_cut must lie in (0, 1], got {}".format(tau_cut))
    data = vol.data
    if np.isnan(data).any() or (data < 0).any():
        raise PreconditionError("vesselness input has negative or NaN voxels; clip_rescale it first")

    analysis = None
    if analysis_mask is not None:
        vol.check_aligned(analysis_mask, what='analysis mask')
        analysis = torch.from_numpy(np.ascontiguousarray(analysis_mask.data))

    best = None
    per_scale = []
    for scale in scales_mm:
        response = response_at_scale(vol, scale, tau_cut, analysis)
        best = response if best is None else torch.maximum(best, response)
        if dump_scales:
            per_scale.append(ProbabilityMap(response.numpy(), vol.spacing, vol.affine.copy()))
        logger.info("Vesselness at %.2f mm: %d voxels above 0.5", scale, int((response > 0.5).sum()))

    out = to_volume(best, vol).as_probability()
    if dump_scales:
        return out, per_scale
    return out
