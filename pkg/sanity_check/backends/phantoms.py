import math
import numpy as np

from auto_comb.volume import LabelMask, ProbabilityMap, Volume3D
from auto_comb.wall import build_histogram


def grid(dims):
    return np.meshgrid(*[np.arange(d, dtype=np.float64) for d in dims], indexing='ij')


def cylinder_volume(dims=(48, 48, 48), radius_vox=2.0, inside=300.0, background=100.0,
                    direction=(1.0, 0.0, 0.0), spacing=(1.0, 1.0, 1.0)):
    '''
    Bright cylinder through the grid centre along direction. Returns the
    volume and the distance of every voxel to the axis.
    '''
    x, y, z = grid(dims)
    c = [(d - 1) / 2.0 for d in dims]
    u = np.asarray(direction, dtype=np.float64)
    u = u / np.linalg.norm(u)
    rx, ry, rz = x - c[0], y - c[1], z - c[2]
    t = rx * u[0] + ry * u[1] + rz * u[2]
    dist = np.sqrt((rx - t * u[0]) ** 2 + (ry - t * u[1]) ** 2 + (rz - t * u[2]) ** 2)
    data = np.where(dist <= radius_vox, inside, background)
    return Volume3D(data, spacing), dist


def quadratic_volume(dims=(32, 32, 32), spacing=(1.0, 1.0, 1.0), fn=None):
    '''Volume sampled from fn(x, y, z) in physical coordinates.'''
    x, y, z = grid(dims)
    x, y, z = x * spacing[0], y * spacing[1], z * spacing[2]
    return Volume3D(fn(x, y, z), spacing)


def random_probability(dims=(6, 6, 6), density=0.5, seed=0):
    rng = np.random.default_rng(seed)
    data = rng.random(dims) * (rng.random(dims) < density)
    return ProbabilityMap(data)


def random_mask(dims=(6, 6, 6), density=0.2, seed=0):
    rng = np.random.default_rng(seed)
    return LabelMask(rng.random(dims) < density)


def point_mask(dims, point, spacing=(1.0, 1.0, 1.0)):
    data = np.zeros(dims, dtype=bool)
    data[tuple(point)] = True
    return LabelMask(data, spacing)


def mixture_samples(weights, means, sigmas, n, seed=0):
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(n, weights)
    parts = [rng.normal(m, s, size=c) for m, s, c in zip(means, sigmas, counts)]
    return np.concatenate(parts)


def samples_volume(values, shape=None):
    '''Pack 1D samples into a volume, padding with NaN so the padding is ignored.'''
    values = np.asarray(values, dtype=np.float64)
    if shape is None:
        side = int(math.ceil(values.size ** (1.0 / 3.0)))
        shape = (side, side, side)
    data = np.full(int(np.prod(shape)), np.nan)
    data[:values.size] = values
    return Volume3D(data.reshape(shape))


def mixture_histogram(weights, means, sigmas, n, seed=0, bin_width=1.0):
    '''Histogram of n mixture samples, binned the way the wall stage bins a volume.'''
    values = mixture_samples(weights, means, sigmas, n, seed)
    return build_histogram(samples_volume(values), bin_width=bin_width, min_voxels=1)


def jacobi_eigenvalues(mats, sweeps=20):
    '''Cyclic Jacobi rotations over a batch of symmetric 3x3 matrices.'''
    a = np.array(mats, dtype=np.float64, copy=True)
    n = a.shape[0]
    for _ in range(sweeps):
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[:, p, q]
            active = apq != 0.0
            safe = np.where(active, apq, 1.0)
            theta = (a[:, q, q] - a[:, p, p]) / (2.0 * safe)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t = np.where(theta == 0.0, 1.0, t)
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            j = np.tile(np.eye(3), (n, 1, 1))
            j[:, p, p] = c
            j[:, q, q] = c
            j[:, p, q] = s
            j[:, q, p] = -s
            a = np.einsum('nji,njk,nkl->nil', j, a, j)
    return np.sort(np.diagonal(a, axis1=1, axis2=2), axis=1)
