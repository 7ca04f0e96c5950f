import logging
import math
from dataclasses import dataclass
import numpy as np

from auto_comb.exceptions import ParameterError

logger = logging.getLogger(__name__)

ROLE_NAMES = ('wall', 'contents', 'fat')


@dataclass
class WallThreshold:
    hu: float
    degenerate: bool
    wall_component: int
    contents_component: int

    def to_dict(self):
        return {'threshold_hu': self.hu, 'degenerate': self.degenerate,
                'wall_component': self.wall_component, 'contents_component': self.contents_component}


def component_roles(model):
    '''Roles for the mean-sorted components, assigned highest mean first.'''
    roles = ['residual'] * model.k
    for rank, j in enumerate(range(model.k - 1, -1, -1)):
        if rank < len(ROLE_NAMES):
            roles[j] = ROLE_NAMES[rank]
    return roles


def _log_density_gap(x, wa, ma, va, wb, mb, vb):
    return (math.log(wa) - 0.5 * math.log(va) - (x - ma) ** 2 / (2.0 * va)) \
        - (math.log(wb) - 0.5 * math.log(vb) - (x - mb) ** 2 / (2.0 * vb))


def _quadratic_roots(a, b, c):
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    roots = [q / a]
    if q != 0.0:
        roots.append(c / q)
    return roots


def wall_threshold(model):
    '''
    Intersection of the weighted densities of the two highest-mean components
    (wall and contents). Taking logs turns the equality into a quadratic; the
    root inside [mu_contents, mu_wall] closest to their midpoint is kept. With
    no such root the weighted midpoint is returned and flagged degenerate.
    '''
    if model.k < 2:
        raise ParameterError("wall_threshold needs k >= 2, got {}".format(model.k))
    order = np.argsort(model.means, kind='stable')
    ia, ib = int(order[-1]), int(order[-2])
    wa, ma, va = float(model.weights[ia]), float(model.means[ia]), float(model.variances[ia])
    wb, mb, vb = float(model.weights[ib]), float(model.means[ib]), float(model.variances[ib])
    lo, hi = min(ma, mb), max(ma, mb)

    roots = []
    if wa > 0 and wb > 0:
        a = 1.0 / (2.0 * vb) - 1.0 / (2.0 * va)
        if abs(a) <= 1e-15 * (1.0 / va + 1.0 / vb):
            a = 0.0
        b = ma / va - mb / vb
        c = mb * mb / (2.0 * vb) - ma * ma / (2.0 * va) + math.log(wa / wb) - 0.5 * math.log(va / vb)
        roots = [r for r in _quadratic_roots(a, b, c) if lo <= r <= hi]

    if not roots:
        hu = (wa * mb + wb * ma) / (wa + wb) if wa + wb > 0 else 0.5 * (ma + mb)
        logger.warning("No density intersection between %.2f and %.2f HU; using weighted midpoint %.2f", lo, hi, hu)
        return WallThreshold(hu, True, ia, ib)

    mid = 0.5 * (lo + hi)
    x = min(roots, key=lambda r: abs(r - mid))
    # Newton polish on the log-density gap
    for _ in range(3):
        slope = -(x - ma) / va + (x - mb) / vb
        if slope == 0.0:
            break
        step = _log_density_gap(x, wa, ma, va, wb, mb, vb) / slope
        if not lo <= x - step <= hi:
            break
        x -= step
    logger.info("Wall threshold %.3f HU (contents %.1f, wall %.1f)", x, mb, ma)
    return WallThreshold(float(x), False, ia, ib)


def wall_mask(vol, threshold):
    if not math.isfinite(threshold):
        raise ParameterError("Wall threshold must be finite, got {}".format(threshold))
    data = vol.data
    return vol.as_mask(np.isfinite(data) & (data >= threshold))
