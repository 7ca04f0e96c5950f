import csv
import logging
import os
import numpy as np
from scipy.stats import norm

from auto_comb.exceptions import InsufficientDataError, NiftiIOError, ParameterError
from auto_comb.volume import Histogram

logger = logging.getLogger(__name__)

MIN_VOXELS = 1000


def build_histogram(vol, bin_width=1.0, min_voxels=MIN_VOXELS):
    '''
    Uniform-width histogram of the non-sentinel voxels. The first bin is
    centred on the smallest retained value, so integer HU land on bin centres
    at unit width; v falls in bin floor((v - min) / width + 1/2).
    '''
    if not bin_width > 0:
        raise ParameterError("bin_width must be > 0, got {}".format(bin_width))
    values = vol.data[np.isfinite(vol.data)]
    if values.size < min_voxels:
        raise InsufficientDataError("Histogram needs at least {} voxels, got {}".format(min_voxels, values.size))
    vmin = float(values.min())
    idx = np.floor((values - vmin) / bin_width + 0.5).astype(np.int64)
    num_bins = int(idx.max()) + 1
    counts = np.bincount(idx, minlength=num_bins).astype(np.float64)
    edges = (vmin - 0.5 * bin_width) + bin_width * np.arange(num_bins + 1, dtype=np.float64)
    logger.debug("Histogram: %d voxels, %d bins from %.1f", values.size, num_bins, vmin)
    return Histogram(edges, counts)


def expected_counts(hist, model):
    '''Per-bin counts each mixture component predicts, shape (bins, k).'''
    lo = hist.bin_edges[:-1, None]
    hi = hist.bin_edges[1:, None]
    sd = np.sqrt(model.variances)[None, :]
    mass = norm.cdf(hi, loc=model.means[None, :], scale=sd) - norm.cdf(lo, loc=model.means[None, :], scale=sd)
    return hist.total * model.weights[None, :] * mass


def write_histogram_csv(hist, path, model=None):
    '''One row per bin: centre, observed count and, with a model, each component and their sum.'''
    header = ['hu', 'count']
    columns = [hist.centers, hist.counts]
    if model is not None:
        comps = expected_counts(hist, model)
        header += ['component_{}'.format(j) for j in range(model.k)] + ['mixture']
        columns += [comps[:, j] for j in range(model.k)] + [comps.sum(axis=1)]
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, 'w', newline='') as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for row in zip(*columns):
                writer.writerow(['{:.6g}'.format(v) for v in row])
    except OSError as err:
        raise NiftiIOError("Cannot write {}: {}".format(path, err)) from err
    return path
