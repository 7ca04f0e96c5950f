from dataclasses import dataclass
import torch

from auto_comb.exceptions import ParameterError
from auto_comb.volume import replicate_shift, smooth_tensor, to_volume

COMPONENTS = ('xx', 'yy', 'zz', 'xy', 'xz', 'yz')


@dataclass
class HessianField:
    '''Six scale-normalised second derivatives sharing the geometry of ref.'''
    xx: torch.Tensor
    yy: torch.Tensor
    zz: torch.Tensor
    xy: torch.Tensor
    xz: torch.Tensor
    yz: torch.Tensor
    scale_mm: float
    ref: object = None

    def components(self):
        return tuple(getattr(self, name) for name in COMPONENTS)

    def volume(self, name):
        return to_volume(getattr(self, name), self.ref)


def central_diff(tensor, axis, h):
    return (replicate_shift(tensor, axis, 1) - replicate_shift(tensor, axis, -1)) / (2.0 * h)


def second_diff(tensor, axis, h):
    return (replicate_shift(tensor, axis, 1) - 2.0 * tensor + replicate_shift(tensor, axis, -1)) / (h * h)


def hessian_at_scale(vol, scale_mm):
    '''
    Smooth at scale_mm, take second central differences in physical units and
    multiply by scale_mm**2 so responses compare across scales.
    '''
    if not scale_mm > 0:
        raise ParameterError("Hessian scale must be > 0 mm, got {}".format(scale_mm))
    hx, hy, hz = vol.spacing
    s = smooth_tensor(vol.to_tensor(), float(scale_mm), vol.spacing)
    norm = float(scale_mm) ** 2

    dx = central_diff(s, 0, hx)
    dy = central_diff(s, 1, hy)
    return HessianField(
        xx=second_diff(s, 0, hx) * norm,
        yy=second_diff(s, 1, hy) * norm,
        zz=second_diff(s, 2, hz) * norm,
        xy=central_diff(dx, 1, hy) * norm,
        xz=central_diff(dx, 2, hz) * norm,
        yz=central_diff(dy, 2, hz) * norm,
        scale_mm=float(scale_mm),
        ref=vol,
    )
