import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field
import numpy as np

from auto_comb.exceptions import EmptyPopulationError, NiftiIOError, ParameterError
from auto_comb.volume import LabelMask, nearest_rank

logger = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = '1.0'
ENCLOSURE_PERCENTILE = 99.0


@dataclass
class FusionParams:
    sigma_wall_mm: float = 5.0
    roi_distance_mm: float = 15.0
    theta: float = 0.05

    def __post_init__(self):
        if not self.sigma_wall_mm > 0 or not self.roi_distance_mm > 0:
            raise ParameterError("sigma_wall_mm and roi_distance_mm must be > 0")
        if not 0.0 <= self.theta <= 1.0:
            raise ParameterError("theta must lie in [0, 1], got {}".format(self.theta))


@dataclass
class RegionScore:
    id: int
    score: float
    voxels: int
    max: float
    verdict: bool
    proximity_mean: float = None
    possible_enclosure_artifact: bool = False


@dataclass
class CombReport:
    regions: list
    global_max: float
    theta: float
    sigma_wall_mm: float = None
    roi_distance_mm: float = None
    roi_source: str = 'auto'
    schema_version: str = REPORT_SCHEMA_VERSION
    extras: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return any(r.verdict for r in self.regions)

    @property
    def score(self):
        return max(r.score for r in self.regions) if self.regions else 0.0

    def to_dict(self):
        out = {
            'schema_version': self.schema_version,
            'verdict': self.verdict,
            'regions': [asdict(r) for r in self.regions],
            'theta': self.theta,
            'sigma_wall_mm': self.sigma_wall_mm,
            'roi_distance_mm': self.roi_distance_mm,
            'roi_source': self.roi_source,
            'global_max': self.global_max,
        }
        out.update(self.extras)
        return out

    def write_json(self, path):
        try:
            parent = os.path.dirname(os.fspath(path))
            if parent:
                os.makedirs(parent, exist_ok=True)
            with open(path, 'w') as f:
                json.dump(self.to_dict(), f, indent=2)
        except OSError as err:
            raise NiftiIOError("Cannot write {}: {}".format(path, err)) from err
        return path


def _region(comb, selector, region_id, theta, proximity=None, enclosure_level=None):
    values = comb.data[selector]
    if values.size == 0:
        raise EmptyPopulationError("ROI region {} is empty".format(region_id))
    score = math.fsum(values.tolist()) / values.size
    region = RegionScore(id=int(region_id), score=score, voxels=int(values.size),
                         max=float(values.max()), verdict=bool(score >= theta))
    if proximity is not None:
        region.proximity_mean = math.fsum(proximity.data[selector].tolist()) / values.size
        region.possible_enclosure_artifact = bool(enclosure_level is not None
                                                  and region.proximity_mean > enclosure_level)
    return region


def _enclosure_level(proximity):
    nonzero = proximity.data[proximity.data > 0]
    return nearest_rank(nonzero, ENCLOSURE_PERCENTILE) if nonzero.size else None


def region_score(comb, roi, theta):
    '''Mean comb probability over roi with verdict mean >= theta.'''
    comb.check_aligned(roi, what='ROI')
    region = _region(comb, roi.data.astype(bool), 1, theta)
    return CombReport([region], float(comb.data.max()), theta)


def score_regions(comb, roi, params, proximity=None, roi_source='auto'):
    '''
    Score every positive label of roi (a LabelMask is one region with id 1).
    With a proximity map each region also reports its mean proximity and is
    flagged when that exceeds the 99th percentile of nonzero proximity.
    '''
    comb.check_aligned(roi, what='ROI')
    if isinstance(roi, LabelMask):
        labels = roi.data.astype(np.int64)
    else:
        labels = np.rint(np.nan_to_num(roi.data)).astype(np.int64)
    ids = [int(i) for i in np.unique(labels) if i > 0]
    if not ids:
        raise EmptyPopulationError("ROI has no positive voxels")
    level = None
    if proximity is not None:
        comb.check_aligned(proximity, what='proximity map')
        level = _enclosure_level(proximity)
    regions = [_region(comb, labels == i, i, params.theta, proximity, level) for i in ids]
    for r in regions:
        logger.info("Region %d: score %.5f over %d voxels -> %s%s", r.id, r.score, r.voxels,
                    'comb sign' if r.verdict else 'no comb sign',
                    ' (possible enclosure artifact)' if r.possible_enclosure_artifact else '')
    return CombReport(regions, float(comb.data.max()), params.theta, params.sigma_wall_mm,
                      params.roi_distance_mm, roi_source)
