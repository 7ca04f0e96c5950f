import logging
from dataclasses import dataclass, field
import numpy as np
import torch
import torch.nn.functional as F

from auto_comb.exceptions import ParameterError
from auto_comb.volume import ProbabilityMap, percentile_nonzero

logger = logging.getLogger(__name__)


@dataclass
class EnhanceParams:
    K: int = 3
    lambda_schedule: list = field(default_factory=lambda: [0.5])
    tau_percent: float = 5.0
    min_floor: float = 0.01

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 0:
            raise ParameterError("K must be a nonnegative integer, got {}".format(self.K))
        self.K = int(self.K)
        schedule = self.lambda_schedule
        if np.ndim(schedule) == 0:
            schedule = [schedule]
        schedule = [float(v) for v in schedule]
        # one value stands for every iteration
        if len(schedule) == 1 and self.K != 1:
            schedule = schedule * self.K
        if len(schedule) != self.K:
            raise ParameterError("lambda_schedule needs {} values, got {}".format(self.K, len(schedule)))
        if any(not 0.0 <= v <= 1.0 for v in schedule):
            raise ParameterError("lambda values must lie in [0, 1], got {}".format(schedule))
        self.lambda_schedule = schedule
        if not 0.0 < self.tau_percent < 100.0:
            raise ParameterError("tau_percent must lie in (0, 100), got {}".format(self.tau_percent))
        if not self.min_floor >= 0.0:
            raise ParameterError("min_floor must be >= 0, got {}".format(self.min_floor))


def local_max_27(p):
    '''Maximum over each voxel's 3x3x3 neighbourhood, clipped at the borders.'''
    t = p.to_tensor()[None, None]
    m = F.max_pool3d(t, kernel_size=3, stride=1, padding=1)[0, 0]
    return p.as_probability(m.numpy())


def geometric_update(p, m, lam):
    '''
    M**(1 - lam) * P**lam. lam == 1 gives P and lam == 0 gives M exactly;
    otherwise a voxel with P == 0 stays 0.
    '''
    if not 0.0 <= lam <= 1.0:
        raise ParameterError("lambda must lie in [0, 1], got {}".format(lam))
    p.check_aligned(m, what='local maximum map')
    if lam == 1.0:
        return p.as_probability(p.data.copy())
    if lam == 0.0:
        return p.as_probability(m.data.copy())
    tp, tm = p.to_tensor(), m.to_tensor()
    blended = torch.pow(tm, 1.0 - lam) * torch.pow(tp, lam)
    out = torch.where(tp == 0, torch.zeros_like(tp), blended)
    return p.as_probability(torch.clamp(out, 0.0, 1.0).numpy())


def apply_exclusion(p, exclusion):
    if exclusion is None:
        return p.as_probability(p.data.copy())
    p.check_aligned(exclusion, what='exclusion mask')
    return p.as_probability(np.where(exclusion.data, 0.0, p.data))


def threshold_step(p_hat, tau_percent, min_floor, exclusion=None):
    '''
    Zero every voxel below max(nearest-rank tau_percent percentile of the
    nonzero voxels, min_floor), and every voxel in exclusion.
    '''
    if exclusion is not None:
        p_hat.check_aligned(exclusion, what='exclusion mask')
    if not np.any(p_hat.data > 0):
        return p_hat.as_probability(np.zeros(p_hat.dims))
    tau = max(percentile_nonzero(p_hat, tau_percent), float(min_floor))
    keep = p_hat.data >= tau
    if exclusion is not None:
        keep &= ~exclusion.data
    logger.debug("Threshold tau=%.6f keeps %d voxels", tau, int(keep.sum()))
    return p_hat.as_probability(np.where(keep, p_hat.data, 0.0))


def enhance(p0, params=None, exclusion=None):
    '''
    K rounds of: local 27-neighbourhood maximum, geometric-mean update with
    that round's lambda, then percentile and floor thresholding with the
    exclusion mask zeroed.
    '''
    params = EnhanceParams() if params is None else params
    p = p0 if isinstance(p0, ProbabilityMap) else p0.as_probability()
    if params.K == 0:
        return apply_exclusion(p, exclusion)
    for k, lam in enumerate(params.lambda_schedule):
        m = local_max_27(p)
        p_hat = geometric_update(p, m, lam)
        p = threshold_step(p_hat, params.tau_percent, params.min_floor, exclusion)
        logger.info("Enhancement round %d/%d (lambda=%.3f): %d nonzero voxels", k + 1, params.K, lam,
                    int(np.count_nonzero(p.data)))
    return p
