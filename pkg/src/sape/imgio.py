"""Minimal file I/O: PNG and binary PPM/PGM images, point sets, meshes.

Images are handled internally as float64 arrays in [0, 1], shaped (H, W)
for grayscale or (H, W, 3) for RGB. Writing quantizes to 8 bits; reading
an 8-bit file back reproduces the written bytes exactly.
"""

from __future__ import annotations

import os
import struct
import zlib

import numpy as np

_PNG_SIG = b"\x89PNG\r\n\x1a\n"


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float64) / 255.0


# ---------------------------------------------------------------- PNG

def _png_chunk(tag: bytes, data: bytes) -> bytes:
    return (struct.pack(">I", len(data)) + tag + data
            + struct.pack(">I", zlib.crc32(tag + data)))


def write_png(path, img: np.ndarray) -> None:
    """8-bit grayscale or RGB PNG, filter type 0, no interlace."""
    raw = to_uint8(np.asarray(img))
    if raw.ndim == 2:
        color_type, channels = 0, 1
        raw = raw[:, :, None]
    elif raw.ndim == 3 and raw.shape[2] == 3:
        color_type, channels = 2, 3
    else:
        raise ValueError(f"cannot write image of shape {np.asarray(img).shape}")
    h, w = raw.shape[:2]
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    rows = np.concatenate(
        [np.zeros((h, 1), dtype=np.uint8), raw.reshape(h, w * channels)], axis=1)
    body = zlib.compress(rows.tobytes(), 6)
    blob = (_PNG_SIG + _png_chunk(b"IHDR", ihdr) + _png_chunk(b"IDAT", body)
            + _png_chunk(b"IEND", b""))
    _atomic_write_bytes(path, blob)


def _paeth(a, b, c):
    p = int(a) + int(b) - int(c)
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    return b if pb <= pc else c


def _unfilter(data: bytes, h: int, w: int, bpp: int) -> np.ndarray:
    stride = w * bpp
    out = np.zeros((h, stride), dtype=np.uint8)
    pos = 0
    for y in range(h):
        ftype = data[pos]
        pos += 1
        row = np.frombuffer(data[pos:pos + stride], dtype=np.uint8).copy()
        pos += stride
        prev = out[y - 1] if y > 0 else np.zeros(stride, dtype=np.uint8)
        if ftype == 0:
            pass
        elif ftype == 1:  # Sub
            for i in range(bpp, stride):
                row[i] = (row[i] + row[i - bpp]) & 0xFF
        elif ftype == 2:  # Up
            row = (row.astype(np.int32) + prev).astype(np.uint8)
        elif ftype == 3:  # Average
            for i in range(stride):
                left = row[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + (int(left) + int(prev[i])) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            for i in range(stride):
                left = row[i - bpp] if i >= bpp else 0
                up_left = prev[i - bpp] if i >= bpp else 0
                row[i] = (row[i] + _paeth(int(left), int(prev[i]),
                                          int(up_left))) & 0xFF
        else:
            raise ValueError(f"unsupported PNG filter type {ftype}")
        out[y] = row
    return out


def read_png(path) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != _PNG_SIG:
        raise ValueError(f"{path}: not a PNG file")
    pos = 8
    width = height = None
    color_type = bit_depth = None
    idat = b""
    while pos < len(blob):
        (length,) = struct.unpack(">I", blob[pos:pos + 4])
        tag = blob[pos + 4:pos + 8]
        data = blob[pos + 8:pos + 8 + length]
        pos += 12 + length
        if tag == b"IHDR":
            width, height, bit_depth, color_type, _, _, interlace = \
                struct.unpack(">IIBBBBB", data)
            if bit_depth != 8:
                raise ValueError(f"{path}: only 8-bit PNGs are supported")
            if interlace != 0:
                raise ValueError(f"{path}: interlaced PNGs are not supported")
            if color_type not in (0, 2, 4, 6):
                raise ValueError(f"{path}: unsupported color type {color_type}")
        elif tag == b"IDAT":
            idat += data
        elif tag == b"IEND":
            break
    channels = {0: 1, 2: 3, 4: 2, 6: 4}[color_type]
    raw = _unfilter(zlib.decompress(idat), height, width, channels)
    img = raw.reshape(height, width, channels)
    if color_type == 4:
        img = img[:, :, :1]  # drop alpha
    elif color_type == 6:
        img = img[:, :, :3]
    if img.shape[2] == 1:
        img = img[:, :, 0]
    return from_uint8(img)


# ---------------------------------------------------------------- PPM/PGM

def write_pnm(path, img: np.ndarray) -> None:
    """Binary PGM (P5) for grayscale, PPM (P6) for RGB, maxval 255."""
    raw = to_uint8(np.asarray(img))
    if raw.ndim == 2:
        magic = b"P5"
        h, w = raw.shape
    elif raw.ndim == 3 and raw.shape[2] == 3:
        magic = b"P6"
        h, w = raw.shape[:2]
    else:
        raise ValueError(f"cannot write image of shape {np.asarray(img).shape}")
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    _atomic_write_bytes(path, header + raw.tobytes())


def read_pnm(path) -> np.ndarray:
    with open(path, "rb") as f:
        blob = f.read()
    magic = blob[:2]
    if magic not in (b"P5", b"P6"):
        raise ValueError(f"{path}: only binary P5/P6 files are supported")
    # header: magic, width, height, maxval, separated by whitespace/comments
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(blob) and blob[pos:pos + 1].isspace():
            pos += 1
        if blob[pos:pos + 1] == b"#":
            while blob[pos:pos + 1] not in (b"\n", b""):
                pos += 1
            continue
        start = pos
        while pos < len(blob) and not blob[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(blob[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported")
    channels = 1 if magic == b"P5" else 3
    raw = np.frombuffer(blob[pos:pos + w * h * channels], dtype=np.uint8)
    img = raw.reshape((h, w) if channels == 1 else (h, w, 3))
    return from_uint8(img)


def read_image(path) -> np.ndarray:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        return read_png(path)
    if ext in (".ppm", ".pgm", ".pnm"):
        return read_pnm(path)
    raise ValueError(f"unsupported image format: {path}")


def write_image(path, img: np.ndarray) -> None:
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".png":
        write_png(path, img)
    elif ext in (".ppm", ".pgm", ".pnm"):
        write_pnm(path, img)
    else:
        raise ValueError(f"unsupported image format: {path}")


# ---------------------------------------------------------------- points & meshes

def write_points(path, points: np.ndarray) -> None:
    """Whitespace-delimited text, one point per line."""
    pts = np.asarray(points, dtype=np.float64)
    lines = "\n".join(" ".join(repr(float(v)) for v in row) for row in pts)
    _atomic_write_bytes(path, (lines + "\n").encode("ascii"))


def read_points(path) -> np.ndarray:
    pts = np.loadtxt(path, dtype=np.float64, ndmin=2)
    return pts


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    """ASCII OFF mesh: returns (vertices (V,3), triangle faces (F,3))."""
    with open(path) as f:
        tokens = []
        for line in f:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if tokens[0] != "OFF":
        raise ValueError(f"{path}: missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        idx = [int(t) for t in tokens[pos + 1:pos + 1 + cnt]]
        pos += 1 + cnt
        for k in range(1, cnt - 1):  # fan-triangulate
            faces.append([idx[0], idx[k], idx[k + 1]])
    return verts, np.array(faces, dtype=np.int64)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """Minimal OBJ: v and f records only, fan-triangulated."""
    verts, faces = [], []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) - 1 for p in parts[1:]]
                for k in range(1, len(idx) - 1):
                    faces.append([idx[0], idx[k], idx[k + 1]])
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64)


def _atomic_write_bytes(path, blob: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as f:
        f.write(blob)
    os.replace(tmp, path)
