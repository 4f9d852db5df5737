"""Binary artifact format: JSON header + flat little-endian float64 stream.

Layout: 4-byte little-endian uint32 header length, UTF-8 JSON header,
then the concatenation of all arrays as float64 little-endian. The
header's "lengths" entry records how to split the stream back.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"SAPB"


def pack(header: dict, arrays: list[np.ndarray]) -> bytes:
    header = dict(header)
    header["lengths"] = [int(np.asarray(a).size) for a in arrays]
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
    return MAGIC + struct.pack("<I", len(head)) + head + body


def unpack(blob: bytes) -> tuple[dict, list[np.ndarray]]:
    if blob[:4] != MAGIC:
        raise ValueError("bad magic; not a sape binary artifact")
    (hlen,) = struct.unpack("<I", blob[4:8])
    header = json.loads(blob[8:8 + hlen].decode("utf-8"))
    flat = np.frombuffer(blob[8 + hlen:], dtype="<f8")
    arrays, off = [], 0
    for n in header["lengths"]:
        arrays.append(flat[off:off + n].astype(np.float64))
        off += n
    if off != flat.size:
        raise ValueError("trailing bytes in artifact body")
    return header, arrays
