from dataclasses import dataclass, field
import numpy as np
import torch

from auto_comb.exceptions import AlignmentError, ParameterError

# Spacing and affine pass through float32 NIfTI headers.
GEOMETRY_ATOL = 1e-5


def _check_geometry(dims, spacing, affine):
    if len(dims) != 3 or any(int(d) <= 0 for d in dims):
        raise ParameterError("Volume dims must be 3 positive integers, got {}".format(tuple(dims)))
    if len(spacing) != 3 or not all(np.isfinite(s) and s > 0 for s in spacing):
        raise ParameterError("Voxel spacing must be 3 positive finite values, got {}".format(tuple(spacing)))
    if affine.shape != (4, 4):
        raise ParameterError("Affine must be 4x4, got shape {}".format(affine.shape))
    if not np.isfinite(affine).all() or abs(np.linalg.det(affine[:3, :3])) == 0.0:
        raise ParameterError("Affine rotation/zoom block must be finite and non-singular")


@dataclass
class Volume3D:
    '''
    Scalar voxel grid. data is indexed [x, y, z]; flattening in Fortran order
    gives the x-fastest voxel order NIfTI stores on disk.
    '''
    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    affine: np.ndarray = field(default=None)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=self._dtype())
        if self.data.ndim != 3:
            raise ParameterError("Volume data must be 3D, got {} dims".format(self.data.ndim))
        self.spacing = tuple(float(s) for s in self.spacing)
        if self.affine is None:
            self.affine = np.diag(list(self.spacing) + [1.0])
        self.affine = np.asarray(self.affine, dtype=np.float64)
        _check_geometry(self.data.shape, self.spacing, self.affine)
        self._validate()

    def _dtype(self):
        return np.float64

    def _validate(self):
        pass

    @property
    def dims(self):
        return tuple(int(d) for d in self.data.shape)

    def flat(self):
        return self.data.ravel(order='F')

    def geometry_equals(self, other):
        return self.dims == other.dims \
            and np.allclose(self.spacing, other.spacing, rtol=0.0, atol=GEOMETRY_ATOL) \
            and np.allclose(self.affine, other.affine, rtol=0.0, atol=GEOMETRY_ATOL)

    def check_aligned(self, other, what='volume'):
        if not self.geometry_equals(other):
            raise AlignmentError("Geometry mismatch with {}: dims {} vs {}, spacing {} vs {}".format(
                what, self.dims, other.dims, self.spacing, other.spacing))

    def with_data(self, data):
        return Volume3D(data, self.spacing, self.affine.copy())

    def as_probability(self, data=None):
        return ProbabilityMap(self.data if data is None else data, self.spacing, self.affine.copy())

    def as_mask(self, data):
        return LabelMask(data, self.spacing, self.affine.copy())

    def to_tensor(self):
        return torch.from_numpy(np.ascontiguousarray(self.data, dtype=np.float64))

    def float32_handoff(self):
        '''Values exactly as they would read back from a float32 NIfTI.'''
        return type(self)(self.data.astype(np.float32).astype(self._dtype()), self.spacing, self.affine.copy())

    def __repr__(self):
        return "{}(dims={}, spacing={})".format(type(self).__name__, self.dims, self.spacing)


class ProbabilityMap(Volume3D):
    def _validate(self):
        finite = self.data[np.isfinite(self.data)]
        if finite.size != self.data.size:
            raise ParameterError("Probability map contains non-finite voxels")
        if finite.size and (finite.min() < 0.0 or finite.max() > 1.0):
            raise ParameterError("Probability map values must lie in [0, 1], got [{}, {}]".format(
                finite.min(), finite.max()))

    def with_data(self, data):
        return ProbabilityMap(data, self.spacing, self.affine.copy())


class LabelMask(Volume3D):
    def _dtype(self):
        return bool

    def with_data(self, data):
        return LabelMask(data, self.spacing, self.affine.copy())

    @property
    def count(self):
        return int(np.count_nonzero(self.data))

    def is_empty(self):
        return not self.data.any()

    @classmethod
    def empty_like(cls, ref):
        return cls(np.zeros(ref.dims, dtype=bool), ref.spacing, ref.affine.copy())

    @classmethod
    def full_like(cls, ref):
        return cls(np.ones(ref.dims, dtype=bool), ref.spacing, ref.affine.copy())


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.float64)
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ParameterError("Histogram needs len(counts) == len(bin_edges) - 1")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ParameterError("Histogram bin edges must be strictly increasing")
        if np.any(self.counts < 0):
            raise ParameterError("Histogram counts must be nonnegative")

    @property
    def total(self):
        return float(np.sum(self.counts))

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def num_occupied(self):
        return int(np.count_nonzero(self.counts))
