# utils.py
import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

logger = logging.getLogger(__name__)

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1
FNV_VECTOR_LIMIT = 1 << 16


def fnv1a64(data: bytes) -> str:
    """64-bit FNV-1a digest as 16 lowercase hex digits."""
    h = FNV64_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV64_PRIME) & _MASK64
    return f"{h:016x}"


def fnv1a64_many(blobs: Sequence[bytes], batch: int = 512) -> List[str]:
    """
    fnv1a64 of every blob, in input order.

    Blobs are sorted by length and hashed column by column in numpy batches;
    uint64 arithmetic wraps, which is the FNV modulus. Blobs above
    FNV_VECTOR_LIMIT bytes go through the scalar loop.
    """
    out: List[str] = [""] * len(blobs)
    order = sorted(range(len(blobs)), key=lambda i: len(blobs[i]))
    small = [i for i in order if len(blobs[i]) <= FNV_VECTOR_LIMIT]
    for i in order[len(small):]:
        out[i] = fnv1a64(blobs[i])
    prime = np.uint64(FNV64_PRIME)
    for start in range(0, len(small), batch):
        idx = small[start:start + batch]
        lengths = np.array([len(blobs[i]) for i in idx], dtype=np.int64)
        width = int(lengths[-1])
        buf = np.zeros((len(idx), width), dtype=np.uint8)
        for r, i in enumerate(idx):
            buf[r, :lengths[r]] = np.frombuffer(blobs[i], dtype=np.uint8)
        h = np.full(len(idx), FNV64_OFFSET, dtype=np.uint64)
        for col in range(width):
            # lengths ascend, so rows still consuming bytes form a suffix
            first = int(np.searchsorted(lengths, col, side="right"))
            h[first:] = (h[first:] ^ buf[first:, col].astype(np.uint64)) * prime
        for r, i in enumerate(idx):
            out[i] = f"{int(h[r]):016x}"
    return out


def format_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"non-finite number {value!r} cannot be serialized")
    text = format(value, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _encode(value: Any, out: list) -> None:
    if isinstance(value, BaseModel):
        _encode(value.model_dump(mode="python"), out)
    elif value is None:
        out.append("null")
    elif isinstance(value, bool):
        out.append("true" if value else "false")
    elif isinstance(value, Enum):
        _encode(value.value, out)
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(format_float(value))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, dict):
        out.append("{")
        for i, (k, v) in enumerate(value.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(k), ensure_ascii=False))
            out.append(":")
            _encode(v, out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, v in enumerate(value):
            if i:
                out.append(",")
            _encode(v, out)
        out.append("]")
    elif hasattr(value, "item"):
        # numpy scalar
        _encode(value.item(), out)
    else:
        raise TypeError(f"cannot serialize {type(value).__name__}")


def canonical_json(value: Any) -> str:
    """
    Deterministic JSON text: field order preserved, floats with 17
    significant digits, non-finite numbers rejected, trailing newline.
    """
    out: list = []
    _encode(value, out)
    out.append("\n")
    return "".join(out)


def write_json(path: Path, value: Any) -> bytes:
    data = canonical_json(value).encode("utf-8")
    Path(path).write_bytes(data)
    return data


def read_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def error_field(exc: ValidationError) -> str:
    """Dotted location of the first failing field of a pydantic error."""
    errors = exc.errors()
    if not errors:
        return ""
    return ".".join(str(part) for part in errors[0].get("loc", ()))


def error_message(exc: ValidationError) -> Optional[str]:
    errors = exc.errors()
    return errors[0].get("msg") if errors else None
