import enum
import logging
import math
from dataclasses import dataclass, field
import numpy as np

from auto_comb.exceptions import ParameterError
from .gmm import fit_gmm

logger = logging.getLogger(__name__)

KNEE_TIE_TOL = 1e-12


class BicPenalty(enum.IntEnum):
    LITERAL_K = 0       # k * ln(N)
    FULL_PARAMS = 1     # (3k - 1) * ln(N)

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ParameterError("Unknown BIC penalty '{}', expected one of {}".format(
                value, [p.name.lower() for p in cls])) from None


def num_params(k, penalty=BicPenalty.FULL_PARAMS):
    return k if BicPenalty.parse(penalty) == BicPenalty.LITERAL_K else 3 * k - 1


def bic(model, n, penalty=BicPenalty.FULL_PARAMS):
    if n < 1:
        raise ParameterError("BIC needs N >= 1, got {}".format(n))
    return -2.0 * model.log_likelihood + num_params(model.k, penalty) * math.log(n)


@dataclass
class BicCurve:
    ks: list
    bic_values: list
    models: list = field(default_factory=list)
    penalty: BicPenalty = BicPenalty.FULL_PARAMS

    def __post_init__(self):
        self.ks = [int(k) for k in self.ks]
        self.bic_values = [float(b) for b in self.bic_values]
        if len(self.ks) != len(self.bic_values):
            raise ParameterError("BIC curve needs one value per k")
        if any(b <= a for a, b in zip(self.ks, self.ks[1:])):
            raise ParameterError("BIC curve ks must be strictly increasing")

    def __len__(self):
        return len(self.ks)

    def best_k(self):
        return self.ks[int(np.argmin(self.bic_values))]

    def rows(self):
        return list(zip(self.ks, self.bic_values))


def _check_range(k_min, k_max):
    if not 1 <= k_min <= k_max:
        raise ParameterError("BIC scan needs 1 <= k_min <= k_max, got {}..{}".format(k_min, k_max))


def bic_scan(hist, k_min=1, k_max=9, seed=0, penalty=BicPenalty.FULL_PARAMS, **fit_kwargs):
    _check_range(k_min, k_max)
    ks, values, models = [], [], []
    for k in range(k_min, k_max + 1):
        model = fit_gmm(hist, k=k, seed=seed, **fit_kwargs)
        ks.append(k)
        values.append(bic(model, hist.total, penalty))
        models.append(model)
        logger.debug("BIC k=%d: %.3f", k, values[-1])
    return BicCurve(ks, values, models, BicPenalty.parse(penalty))


def bic_scan_pooled(histograms, k_min=1, k_max=9, seed=0, penalty=BicPenalty.FULL_PARAMS, **fit_kwargs):
    '''Mean BIC over several histograms, as when choosing k across a cohort.'''
    histograms = list(histograms)
    if len(histograms) == 0:
        raise ParameterError("bic_scan_pooled needs at least one histogram")
    curves = [bic_scan(h, k_min, k_max, seed, penalty, **fit_kwargs) for h in histograms]
    values = np.mean(np.array([c.bic_values for c in curves]), axis=0)
    models = [[c.models[i] for c in curves] for i in range(len(curves[0]))]
    return BicCurve(curves[0].ks, values.tolist(), models, BicPenalty.parse(penalty))


def knee_of_curve(curve):
    '''
    k farthest from the chord joining the curve's endpoints after both axes
    are min-max normalised. Only interior points compete; ties go to the
    smaller k.
    '''
    if len(curve) < 3:
        raise ParameterError("knee_of_curve needs at least 3 points, got {}".format(len(curve)))
    ks = np.asarray(curve.ks, dtype=np.float64)
    vals = np.asarray(curve.bic_values, dtype=np.float64)
    x = (ks - ks[0]) / (ks[-1] - ks[0])
    span = vals.max() - vals.min()
    y = (vals - vals.min()) / span if span > 0 else np.zeros_like(vals)
    dx, dy = x[-1] - x[0], y[-1] - y[0]
    dist = np.abs(dx * (y - y[0]) - dy * (x - x[0])) / math.hypot(dx, dy)

    best = 1
    for i in range(2, len(ks) - 1):
        if dist[i] > dist[best] + KNEE_TIE_TOL:
            best = i
    return curve.ks[best]
