import logging
import os
import numpy as np
import nibabel as nib
from nibabel.openers import ImageOpener
from nibabel.filebasedimages import ImageFileError
from nibabel.spatialimages import HeaderDataError

from auto_comb.exceptions import NiftiIOError, NiftiFormatError, UnsupportedDatatypeError
from .volume import Volume3D, LabelMask

logger = logging.getLogger(__name__)

NIFTI1_HEADER_SIZE = 348
NIFTI1_MAGICS = (b'n+1\x00', b'ni1\x00')
SUPPORTED_DTYPES = (np.dtype(np.int16), np.dtype(np.uint8), np.dtype(np.int32),
                    np.dtype(np.float32), np.dtype(np.float64))
WRITE_DTYPES = (np.dtype(np.float32), np.dtype(np.int16), np.dtype(np.uint8))


def _check_magic(path):
    try:
        with ImageOpener(path, 'rb') as fobj:
            raw = fobj.read(NIFTI1_HEADER_SIZE)
    except (OSError, EOFError) as err:
        raise NiftiIOError("Cannot read NIfTI header of {}: {}".format(path, err)) from err
    if len(raw) < NIFTI1_HEADER_SIZE:
        raise NiftiFormatError("{}: header truncated ({} of {} bytes)".format(path, len(raw), NIFTI1_HEADER_SIZE))
    if raw[344:348] not in NIFTI1_MAGICS:
        raise NiftiFormatError("{}: not a NIfTI-1 file (magic {!r})".format(path, raw[344:348]))


def _affine_from_header(header, spacing):
    sform, sform_code = header.get_sform(coded=True)
    if sform is not None and int(sform_code) > 0:
        return np.asarray(sform, dtype=np.float64)
    qform, qform_code = header.get_qform(coded=True)
    if qform is not None and int(qform_code) > 0:
        return np.asarray(qform, dtype=np.float64)
    return np.diag(list(spacing) + [1.0])


def read_nifti(path, cls=Volume3D):
    '''
    Read a single-file NIfTI-1 volume. Stored values are scaled by
    scl_slope/scl_inter when the slope is nonzero.
    '''
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise NiftiIOError("No such NIfTI file: {}".format(path))
    _check_magic(path)
    try:
        img = nib.Nifti1Image.from_filename(path, mmap=False)
    except (ImageFileError, HeaderDataError) as err:
        raise NiftiFormatError("{}: {}".format(path, err)) from err
    except (OSError, EOFError) as err:
        raise NiftiIOError("{}: {}".format(path, err)) from err

    header = img.header
    dtype = header.get_data_dtype()
    if np.dtype(dtype.newbyteorder('=')) not in SUPPORTED_DTYPES:
        raise UnsupportedDatatypeError("{}: unsupported NIfTI datatype {}".format(path, dtype))

    shape = header.get_data_shape()
    if len(shape) < 3 or any(int(s) != 1 for s in shape[3:]):
        raise NiftiFormatError("{}: expected a 3D volume, got shape {}".format(path, shape))

    try:
        data = np.asarray(img.dataobj, dtype=np.float64)
    except (ValueError, OSError, EOFError) as err:
        raise NiftiIOError("{}: data section unreadable ({})".format(path, err)) from err
    data = data.reshape(shape[:3], order='F') if data.ndim != 3 else data

    spacing = tuple(float(p) for p in header['pixdim'][1:4])
    if not all(np.isfinite(s) and s > 0 for s in spacing):
        raise NiftiFormatError("{}: pixdim[1..3] must be positive, got {}".format(path, spacing))
    affine = _affine_from_header(header, spacing)
    logger.debug("Read %s dims=%s spacing=%s dtype=%s", path, shape[:3], spacing, dtype)
    if cls is LabelMask:
        return LabelMask(data > 0.5, spacing, affine)
    return cls(data, spacing, affine)


def read_mask(path):
    return read_nifti(path, cls=LabelMask)


def write_nifti(vol, path, dtype=np.float32):
    '''
    Write a volume as NIfTI-1 (gzip when the name ends with .gz). Probability
    maps and intermediate volumes go out as float32 with identity scaling.
    '''
    path = os.fspath(path)
    dtype = np.dtype(dtype)
    if dtype not in WRITE_DTYPES:
        raise UnsupportedDatatypeError("Cannot write datatype {}".format(dtype))
    data = vol.data
    if dtype.kind in 'iu':
        data = np.rint(np.nan_to_num(data.astype(np.float64)))
        info = np.iinfo(dtype)
        data = np.clip(data, info.min, info.max)
    img = nib.Nifti1Image(np.asarray(data, dtype=dtype), vol.affine)
    header = img.header
    header.set_data_dtype(dtype)
    header.set_zooms(vol.spacing)
    header.set_sform(vol.affine, code=1)
    header.set_qform(vol.affine, code=1)
    header.set_slope_inter(1.0, 0.0)
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        nib.save(img, path)
    except OSError as err:
        raise NiftiIOError("Cannot write {}: {}".format(path, err)) from err
    logger.debug("Wrote %s (%s)", path, dtype)
    return path
