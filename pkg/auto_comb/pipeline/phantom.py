import dataclasses
import json
import logging
import math
import os
from dataclasses import dataclass, field
import numpy as np

from auto_comb.exceptions import ConfigError, ParameterError
from auto_comb.volume import LabelMask, Volume3D, gaussian_smooth, write_nifti

logger = logging.getLogger(__name__)

CT_RANGE = (-1024, 3071)
WALL_SHAPES = ('tube', 'torus')
VESSEL_ORIENTATIONS = ('perpendicular', 'parallel')


@dataclass
class OrganBlob:
    name: str
    center: tuple
    radius_vox: float
    hu: float


@dataclass
class PhantomSpec:
    '''
    Synthetic abdominal scene: a bowel segment (tube along z or torus in the
    xy plane) with an enhancing wall, an array of vessels next to it, organ
    spheres to be removed, partial-volume blur and Gaussian HU noise.
    '''
    dims: tuple = (128, 128, 128)
    spacing: tuple = (0.5, 0.5, 0.5)
    background_hu: float = -100.0
    wall_shape: str = 'tube'
    lumen_radius_vox: float = 16.0
    wall_thickness_vox: float = 4.0
    wall_hu: float = 200.0
    lumen_hu: float = 20.0
    torus_major_radius_vox: float = 36.0
    vessel_count: int = 8
    vessel_radius_vox: float = 2.0
    vessel_length_vox: float = 20.0
    vessel_spacing_vox: float = 8.0
    vessel_hu: float = 150.0
    vessel_orientation: str = 'perpendicular'
    organs: list = field(default_factory=lambda: [OrganBlob('liver', (24, 24, 64), 12.0, 60.0)])
    noise_sigma_hu: float = 10.0
    blur_sigma_vox: float = 0.5
    roi_half_width_vox: int = 3
    seed: int = 0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing = tuple(float(s) for s in self.spacing)
        self.organs = [o if isinstance(o, OrganBlob) else OrganBlob(**o) for o in self.organs]
        self.validate()

    @property
    def center(self):
        return tuple((d - 1) / 2.0 for d in self.dims)

    @property
    def outer_radius_vox(self):
        return self.lumen_radius_vox + self.wall_thickness_vox

    def validate(self):
        if len(self.dims) != 3 or any(d < 8 for d in self.dims):
            raise ParameterError("Phantom dims must be 3 sizes >= 8, got {}".format(self.dims))
        if self.wall_shape not in WALL_SHAPES:
            raise ParameterError("wall_shape must be one of {}".format(WALL_SHAPES))
        if self.vessel_orientation not in VESSEL_ORIENTATIONS:
            raise ParameterError("vessel_orientation must be one of {}".format(VESSEL_ORIENTATIONS))
        if self.wall_shape == 'torus' and self.vessel_orientation == 'parallel':
            raise ParameterError("Parallel vessels need a tube wall")
        hus = [self.background_hu, self.wall_hu, self.lumen_hu, self.vessel_hu] + [o.hu for o in self.organs]
        if any(not CT_RANGE[0] <= h <= CT_RANGE[1] for h in hus):
            raise ParameterError("Phantom HU values must lie in {}".format(CT_RANGE))
        if self.noise_sigma_hu < 0 or self.blur_sigma_vox < 0:
            raise ParameterError("noise_sigma_hu and blur_sigma_vox must be >= 0")
        if self.vessel_count < 0 or self.lumen_radius_vox <= 0 or self.wall_thickness_vox <= 0:
            raise ParameterError("Phantom needs vessel_count >= 0 and positive lumen radius and wall thickness")

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError("Unknown phantom spec keys: {}".format(', '.join(sorted(unknown))))
        return cls(**d)

    @classmethod
    def load(cls, path):
        try:
            with open(path, 'r') as f:
                return cls.from_dict(json.load(f))
        except OSError as err:
            raise ConfigError("Cannot read phantom spec {}: {}".format(path, err)) from err
        except json.JSONDecodeError as err:
            raise ConfigError("Phantom spec {} is not valid JSON: {}".format(path, err)) from err


def _grid(dims):
    return np.meshgrid(*[np.arange(d, dtype=np.float64) for d in dims], indexing='ij')


def _segment_distance(x, y, z, start, end):
    p0 = np.asarray(start, dtype=np.float64)
    d = np.asarray(end, dtype=np.float64) - p0
    length2 = float(d @ d)
    rx, ry, rz = x - p0[0], y - p0[1], z - p0[2]
    t = np.clip((rx * d[0] + ry * d[1] + rz * d[2]) / length2, 0.0, 1.0)
    return np.sqrt((rx - t * d[0]) ** 2 + (ry - t * d[1]) ** 2 + (rz - t * d[2]) ** 2)


def _rasterize_axis(start, end, dims):
    '''Voxels nearest to points sampled every quarter voxel along the segment.'''
    p0, p1 = np.asarray(start, dtype=np.float64), np.asarray(end, dtype=np.float64)
    steps = max(2, int(math.ceil(4.0 * np.linalg.norm(p1 - p0))) + 1)
    pts = np.rint(p0[None, :] + np.linspace(0.0, 1.0, steps)[:, None] * (p1 - p0)[None, :]).astype(np.int64)
    out = np.zeros(dims, dtype=bool)
    out[pts[:, 0], pts[:, 1], pts[:, 2]] = True
    return out


def _in_grid(point, dims, margin=0.0):
    return all(margin <= p <= d - 1 - margin for p, d in zip(point, dims))


def _wall_distance(spec, x, y, z):
    '''Distance from each voxel to the bowel axis (line or circle).'''
    cx, cy, cz = spec.center
    if spec.wall_shape == 'tube':
        return np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
    ring = np.sqrt((x - cx) ** 2 + (y - cy) ** 2) - spec.torus_major_radius_vox
    return np.sqrt(ring ** 2 + (z - cz) ** 2)


def vessel_segments(spec):
    cx, cy, cz = spec.center
    outer = spec.outer_radius_vox
    n, length, gap = spec.vessel_count, spec.vessel_length_vox, spec.vessel_spacing_vox
    offsets = [(i - (n - 1) / 2.0) * gap for i in range(n)]
    segments = []
    if spec.wall_shape == 'tube' and spec.vessel_orientation == 'perpendicular':
        for off in offsets:
            segments.append(((cx + outer, cy, cz + off), (cx + outer + length, cy, cz + off)))
    elif spec.wall_shape == 'tube':
        x0 = cx + outer + spec.vessel_radius_vox + 2.0
        for off in offsets:
            segments.append(((x0, cy + off, cz - length / 2.0), (x0, cy + off, cz + length / 2.0)))
    else:
        r0 = spec.torus_major_radius_vox + outer
        for i in range(n):
            a = 2.0 * math.pi * i / max(n, 1)
            u = (math.cos(a), math.sin(a))
            segments.append(((cx + r0 * u[0], cy + r0 * u[1], cz),
                             (cx + (r0 + length) * u[0], cy + (r0 + length) * u[1], cz)))
    return segments


def roi_box(spec):
    '''Mesenteric region on the vessel side of the wall where the comb sign is read.'''
    cx, cy, cz = spec.center
    outer = spec.outer_radius_vox
    h = spec.roi_half_width_vox
    x, y, z = _grid(spec.dims)
    if spec.wall_shape == 'tube':
        if spec.vessel_orientation == 'perpendicular':
            span = (max(spec.vessel_count - 1, 0) * spec.vessel_spacing_vox) / 2.0 + h
            return (x >= cx + outer + 1) & (x <= cx + outer + spec.vessel_length_vox) \
                & (np.abs(y - cy) <= h) & (np.abs(z - cz) <= span)
        span = (max(spec.vessel_count - 1, 0) * spec.vessel_spacing_vox) / 2.0 + h
        x0 = cx + outer + spec.vessel_radius_vox + 2.0
        return (np.abs(x - x0) <= h) & (np.abs(y - cy) <= span) & (np.abs(z - cz) <= spec.vessel_length_vox / 2.0)
    dist = _wall_distance(spec, x, y, z)
    radial = np.sqrt((x - cx) ** 2 + (y - cy) ** 2)
    return (dist > outer) & (radial <= spec.torus_major_radius_vox + outer + spec.vessel_length_vox) \
        & (radial > spec.torus_major_radius_vox) & (np.abs(z - cz) <= h)


@dataclass
class Phantom:
    ct: Volume3D
    masks: dict
    manifest: dict


def make_phantom(spec, out_dir=None):
    '''
    Build the phantom; with out_dir, also write ct.nii.gz (int16), uint8
    masks, manifest.json and a pipeline.json config that runs on them.
    Output depends only on spec, seed included.
    '''
    dims = spec.dims
    x, y, z = _grid(dims)
    cx, cy, cz = spec.center
    outer = spec.outer_radius_vox

    extent = outer + (spec.torus_major_radius_vox if spec.wall_shape == 'torus' else 0.0)
    if spec.wall_shape == 'tube' and (cx - outer < 0 or cy - outer < 0):
        raise ParameterError("Tube wall of outer radius {} does not fit the grid".format(outer))
    if spec.wall_shape == 'torus' and (cx - extent < 0 or cy - extent < 0 or cz - outer < 0):
        raise ParameterError("Torus wall does not fit the grid")
    segments = vessel_segments(spec)
    for start, end in segments:
        if not (_in_grid(start, dims) and _in_grid(end, dims, spec.vessel_radius_vox)):
            raise ParameterError("Vessel from {} to {} leaves the grid".format(start, end))
    for organ in spec.organs:
        if not _in_grid(organ.center, dims, organ.radius_vox):
            raise ParameterError("Organ '{}' does not fit the grid".format(organ.name))

    dist = _wall_distance(spec, x, y, z)
    lumen = dist <= spec.lumen_radius_vox
    wall = (dist > spec.lumen_radius_vox) & (dist <= outer)
    vessels = np.zeros(dims, dtype=bool)
    centerline = np.zeros(dims, dtype=bool)
    for start, end in segments:
        vessels |= _segment_distance(x, y, z, start, end) <= spec.vessel_radius_vox
        centerline |= _rasterize_axis(start, end, dims)
    vessels &= ~(lumen | wall)
    centerline &= vessels

    clean = np.full(dims, float(spec.background_hu))
    organ_masks = dict()
    for organ in spec.organs:
        m = (x - organ.center[0]) ** 2 + (y - organ.center[1]) ** 2 + (z - organ.center[2]) ** 2 \
            <= organ.radius_vox ** 2
        clean[m] = organ.hu
        organ_masks[organ.name] = m
    clean[vessels] = spec.vessel_hu
    clean[lumen] = spec.lumen_hu
    clean[wall] = spec.wall_hu

    ref = Volume3D(clean, spec.spacing)
    if spec.blur_sigma_vox > 0:
        clean = gaussian_smooth(ref, spec.blur_sigma_vox * min(spec.spacing)).data
    rng = np.random.default_rng(spec.seed)
    noisy = clean + rng.normal(0.0, spec.noise_sigma_hu, size=dims) if spec.noise_sigma_hu > 0 else clean
    ct = ref.with_data(np.clip(np.rint(noisy), *CT_RANGE))

    masks = {
        'small_bowel': ref.as_mask(lumen | wall),
        'wall_truth': ref.as_mask(wall),
        'vessels': ref.as_mask(vessels),
        'centerline': ref.as_mask(centerline),
        'roi': ref.as_mask(roi_box(spec)),
    }
    for name, m in organ_masks.items():
        masks[name] = ref.as_mask(m)

    manifest = {
        'spec': spec.to_dict(),
        'wall': {'shape': spec.wall_shape, 'center': list(spec.center), 'lumen_radius_vox': spec.lumen_radius_vox,
                 'outer_radius_vox': outer},
        'vessels': [{'start': list(s), 'end': list(e), 'radius_vox': spec.vessel_radius_vox} for s, e in segments],
        'organs': [dataclasses.asdict(o) for o in spec.organs],
        'counts': {name: m.count for name, m in masks.items()},
    }
    logger.info("Phantom %s wall, %d vessels, %d vessel voxels", spec.wall_shape, len(segments), masks['vessels'].count)
    phantom = Phantom(ct, masks, manifest)
    if out_dir is not None:
        write_phantom(phantom, spec, out_dir)
    return phantom


def write_phantom(phantom, spec, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    files = {'ct': write_nifti(phantom.ct, os.path.join(out_dir, 'ct.nii.gz'), np.int16)}
    for name, m in phantom.masks.items():
        files[name] = write_nifti(m, os.path.join(out_dir, name + '.nii.gz'), np.uint8)
    phantom.manifest['files'] = {k: os.path.basename(v) for k, v in files.items()}
    with open(os.path.join(out_dir, 'manifest.json'), 'w') as f:
        json.dump(phantom.manifest, f, indent=2, sort_keys=True)

    config = {
        'input': {
            'ct': 'ct.nii.gz',
            'organs': dict({'small_bowel': 'small_bowel.nii.gz'},
                           **{o.name: o.name + '.nii.gz' for o in spec.organs}),
            'intestine': ['small_bowel'],
            'roi': 'roi.nii.gz',
        },
        'output': {'dir': 'out'},
    }
    with open(os.path.join(out_dir, 'pipeline.json'), 'w') as f:
        json.dump(config, f, indent=2, sort_keys=True)
    logger.info("Phantom written to %s", out_dir)
    return files
