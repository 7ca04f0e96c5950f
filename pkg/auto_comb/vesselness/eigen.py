import math
from dataclasses import dataclass
import torch

from auto_comb.exceptions import ParameterError

# Below this 1 - r**2 the trigonometric root loses precision.
NEAR_DEGENERATE = 1e-12
CHUNK_VOXELS = 1 << 20


@dataclass
class EigenTriple:
    '''Eigenvalues ordered by ascending magnitude.'''
    l1: float
    l2: float
    l3: float

    def as_tuple(self):
        return (self.l1, self.l2, self.l3)


def _sort_by_magnitude(evals):
    order = torch.argsort(evals.abs(), dim=-1, stable=True)
    return torch.gather(evals, -1, order)


def _eig3_chunk(xx, yy, zz, xy, xz, yz):
    q = (xx + yy + zz) / 3.0
    p1 = xy * xy + xz * xz + yz * yz
    axx, ayy, azz = xx - q, yy - q, zz - q
    p2 = axx * axx + ayy * ayy + azz * azz + 2.0 * p1
    p = torch.sqrt(p2 / 6.0)
    safe_p = torch.where(p > 0, p, torch.ones_like(p))
    bxx, byy, bzz = axx / safe_p, ayy / safe_p, azz / safe_p
    bxy, bxz, byz = xy / safe_p, xz / safe_p, yz / safe_p
    det = bxx * (byy * bzz - byz * byz) - bxy * (bxy * bzz - byz * bxz) + bxz * (bxy * byz - byy * bxz)
    r = torch.clamp(0.5 * det, -1.0, 1.0)
    phi = torch.acos(r) / 3.0
    e1 = q + 2.0 * p * torch.cos(phi)
    e3 = q + 2.0 * p * torch.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    evals = torch.stack([e1, e2, e3], dim=-1)
    evals = torch.where((p > 0).unsqueeze(-1), evals, q.unsqueeze(-1).expand_as(evals))

    fallback = (p > 0) & (1.0 - r * r < NEAR_DEGENERATE)
    if bool(fallback.any()):
        idx = torch.nonzero(fallback, as_tuple=True)[0]
        mats = torch.stack([
            torch.stack([xx[idx], xy[idx], xz[idx]], dim=-1),
            torch.stack([xy[idx], yy[idx], yz[idx]], dim=-1),
            torch.stack([xz[idx], yz[idx], zz[idx]], dim=-1),
        ], dim=-2)
        evals[idx] = torch.linalg.eigvalsh(mats)
    return _sort_by_magnitude(evals)


def eig3_field(xx, yy, zz, xy, xz, yz):
    '''
    Closed-form eigenvalues of a field of symmetric 3x3 matrices, returned as
    three tensors shaped like the inputs and ordered |l1| <= |l2| <= |l3|.
    Near-repeated roots go through LAPACK instead.
    '''
    shape = xx.shape
    flat = [t.reshape(-1).to(torch.float64) for t in (xx, yy, zz, xy, xz, yz)]
    n = flat[0].numel()
    out = torch.empty((n, 3), dtype=torch.float64)
    for start in range(0, n, CHUNK_VOXELS):
        stop = min(start + CHUNK_VOXELS, n)
        out[start:stop] = _eig3_chunk(*[t[start:stop] for t in flat])
    return tuple(out[:, i].reshape(shape) for i in range(3))


def eig3_symmetric(h):
    '''Eigenvalues of one symmetric matrix given as (xx, yy, zz, xy, xz, yz).'''
    h = [float(v) for v in h]
    if len(h) != 6:
        raise ParameterError("eig3_symmetric expects 6 entries, got {}".format(len(h)))
    if not all(math.isfinite(v) for v in h):
        raise ParameterError("eig3_symmetric got non-finite entries {}".format(h))
    l1, l2, l3 = eig3_field(*[torch.tensor([v], dtype=torch.float64) for v in h])
    return EigenTriple(float(l1[0]), float(l2[0]), float(l3[0]))
