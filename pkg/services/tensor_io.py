"""
Tensor IO - NPY v1.0 emission and RFC 4180 CSV tables
"""
import logging
import struct
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from exceptions import ShapeError

logger = logging.getLogger(__name__)

NPY_MAGIC = b"\x93NUMPY"
NPY_VERSION = b"\x01\x00"
NPY_ALIGN = 64
SUPPORTED_DESCR = {"<f4", "<f8", "<i8", "<i4", "|u1", "|b1"}


def _shape_text(shape: Tuple[int, ...]) -> str:
    if len(shape) == 1:
        return f"({shape[0]},)"
    return "(" + ", ".join(str(d) for d in shape) + ")"


def npy_header(descr: str, shape: Tuple[int, ...]) -> bytes:
    """Magic, version, header length and the space-padded header dict, 64-byte aligned."""
    text = f"{{'descr': '{descr}', 'fortran_order': False, 'shape': {_shape_text(shape)}, }}"
    fixed = len(NPY_MAGIC) + len(NPY_VERSION) + 2
    total = fixed + len(text) + 1
    pad = (-total) % NPY_ALIGN
    header = (text + " " * pad + "\n").encode("latin1")
    return NPY_MAGIC + NPY_VERSION + struct.pack("<H", len(header)) + header


def write_npy(values, shape: Optional[Sequence[int]] = None, dtype: str = "<f4") -> bytes:
    """
    Serialize values as an NPY v1.0 byte string in C order, little endian.

    shape defaults to the array's own shape; a shape whose product differs
    from the number of values raises ShapeError.
    """
    arr = np.asarray(values)
    if dtype not in SUPPORTED_DESCR:
        raise ShapeError(f"unsupported dtype {dtype}")
    target = tuple(int(d) for d in (arr.shape if shape is None else shape))
    if any(d < 0 for d in target) or int(np.prod(target, dtype=np.int64)) != arr.size:
        raise ShapeError(f"shape {target} does not hold {arr.size} values")
    data = np.ascontiguousarray(arr.reshape(target), dtype=np.dtype(dtype))
    return npy_header(dtype, target) + data.tobytes(order="C")


def save_npy(path: Path, values, shape: Optional[Sequence[int]] = None, dtype: str = "<f4") -> bytes:
    data = write_npy(values, shape, dtype)
    Path(path).write_bytes(data)
    logger.info(f"📦 Wrote {Path(path).name} ({len(data)} bytes)")
    return data


def write_csv(path: Path, frame: pd.DataFrame) -> None:
    """RFC 4180 table: header row, CRLF line ends, floats with 17 significant digits."""
    frame.to_csv(path, index=False, lineterminator="\r\n", float_format="%.17g", encoding="utf-8")
    logger.info(f"📦 Wrote {Path(path).name} ({len(frame)} rows)")
