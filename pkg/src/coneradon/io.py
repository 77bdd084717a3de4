"""The CRTD container: a small binary format for every grid type of the package.

Layout (all little-endian)::

    b"CRTD" | u16 version | u16 ndim | u32 dims[ndim] | f64 payload (row-major)
    | u32 meta_len | meta_len bytes of UTF-8 JSON

The JSON block is a flat object. ``kind`` names the container and the other
keys carry its grid (extent, z-range, node lists, k_weight). Complex arrays
are stored with a trailing axis of length 2 (real, imaginary).
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grids import ConeData, Image2D, PolarCoefficients, RadonData3D, Volume3D, VlineSinogram

MAGIC = b"CRTD"
VERSION = 1


class DataFileError(Exception):
    """Malformed or unreadable CRTD file."""


@dataclass
class DataFile:
    array: np.ndarray
    meta: dict = field(default_factory=dict)


def _list(a):
    return [float(v) for v in np.asarray(a, float).ravel()]


def encode(obj) -> DataFile:
    """Turn a container (or a bare real array) into a :class:`DataFile`."""
    if isinstance(obj, DataFile):
        return obj
    if isinstance(obj, Image2D):
        return DataFile(np.asarray(obj.values), {"kind": "Image2D", "extent": float(obj.extent)})
    if isinstance(obj, Volume3D):
        return DataFile(np.asarray(obj.values), {"kind": "Volume3D", "z_min": float(obj.z_min),
                                                 "z_max": float(obj.z_max), "extent_xy": float(obj.extent_xy)})
    if isinstance(obj, VlineSinogram):
        return DataFile(np.asarray(obj.data), {"kind": "VlineSinogram", "psi_nodes": _list(obj.psi_nodes)})
    if isinstance(obj, ConeData):
        return DataFile(np.asarray(obj.data), {"kind": "ConeData", "k_weight": int(obj.k_weight),
                                               "z_nodes": _list(obj.z_nodes), "beta_nodes": _list(obj.beta_nodes),
                                               "psi_nodes": _list(obj.psi_nodes)})
    if isinstance(obj, RadonData3D):
        return DataFile(np.asarray(obj.data), {"kind": "RadonData3D", "phi": _list(obj.phi),
                                               "beta_nodes": _list(obj.beta_nodes), "s_nodes": _list(obj.s_nodes)})
    if isinstance(obj, PolarCoefficients):
        c = np.asarray(obj.coeffs)
        return DataFile(np.stack([c.real, c.imag], axis=-1), {"kind": "PolarCoefficients", "complex": True})
    arr = np.asarray(obj)
    if np.iscomplexobj(arr):
        return DataFile(np.stack([arr.real, arr.imag], axis=-1), {"kind": "array", "complex": True})
    return DataFile(arr.astype(float), {"kind": "array"})


def decode(df: DataFile):
    """Rebuild the container described by ``df.meta['kind']``."""
    m = df.meta
    a = df.array
    kind = m.get("kind", "array")
    try:
        if kind == "Image2D":
            return Image2D(a, m["extent"])
        if kind == "Volume3D":
            return Volume3D(a, m["z_min"], m["z_max"], m["extent_xy"])
        if kind == "VlineSinogram":
            return VlineSinogram(a, np.array(m["psi_nodes"]))
        if kind == "ConeData":
            return ConeData(a, int(m["k_weight"]), np.array(m["z_nodes"]), np.array(m["beta_nodes"]),
                            np.array(m["psi_nodes"]))
        if kind == "RadonData3D":
            return RadonData3D(a, np.array(m["phi"]), np.array(m["beta_nodes"]), np.array(m["s_nodes"]))
        if kind == "PolarCoefficients":
            return PolarCoefficients(a[..., 0] + 1j * a[..., 1])
    except KeyError as exc:
        raise DataFileError(f"metadata of kind {kind!r} lacks key {exc}") from None
    if kind != "array":
        raise DataFileError(f"unknown container kind {kind!r}")
    return a[..., 0] + 1j * a[..., 1] if m.get("complex") else a


def to_bytes(obj) -> bytes:
    df = encode(obj)
    arr = np.ascontiguousarray(df.array, dtype="<f8")
    for k, v in df.meta.items():
        if isinstance(v, dict):
            raise ValueError(f"metadata must be flat; key {k!r} holds an object")
    meta = json.dumps(df.meta).encode("utf-8")
    head = MAGIC + struct.pack("<HH", VERSION, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return head + arr.tobytes() + struct.pack("<I", len(meta)) + meta


def from_bytes(buf: bytes) -> DataFile:
    if len(buf) < 8:
        raise DataFileError(f"file too short for a header ({len(buf)} bytes, need 8 at offset 0)")
    if buf[:4] != MAGIC:
        raise DataFileError(f"bad magic {buf[:4]!r} at offset 0, expected {MAGIC!r}")
    version, ndim = struct.unpack_from("<HH", buf, 4)
    if version != VERSION:
        raise DataFileError(f"unsupported version {version} at offset 4")
    off = 8
    if len(buf) < off + 4 * ndim:
        raise DataFileError(f"truncated dims at offset {off}: need {4 * ndim} bytes")
    dims = struct.unpack_from(f"<{ndim}I", buf, off)
    off += 4 * ndim
    nbytes = 8 * int(np.prod(dims, dtype=np.int64))
    if len(buf) < off + nbytes:
        raise DataFileError(f"truncated payload at offset {off}: need {nbytes} bytes, have {len(buf) - off}")
    arr = np.frombuffer(buf, dtype="<f8", count=nbytes // 8, offset=off).reshape(dims).astype(float)
    off += nbytes
    if len(buf) < off + 4:
        raise DataFileError(f"missing metadata length at offset {off}")
    (mlen,) = struct.unpack_from("<I", buf, off)
    off += 4
    if len(buf) != off + mlen:
        raise DataFileError(f"metadata block at offset {off} declares {mlen} bytes, file holds {len(buf) - off}")
    try:
        meta = json.loads(buf[off:off + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataFileError(f"metadata at offset {off} is not valid JSON: {exc}") from None
    if not isinstance(meta, dict):
        raise DataFileError(f"metadata at offset {off} is not a JSON object")
    return DataFile(arr, meta)


def write(path, obj) -> None:
    Path(path).write_bytes(to_bytes(obj))


def read_raw(path) -> DataFile:
    try:
        buf = Path(path).read_bytes()
    except OSError as exc:
        raise DataFileError(f"cannot read {path}: {exc.strerror}") from None
    return from_bytes(buf)


def read(path):
    """Read a CRTD file and return the container it describes."""
    return decode(read_raw(path))


def write_pgm(path, image: np.ndarray) -> None:
    """8-bit binary PGM, min-max windowed; rows follow the first array axis."""
    a = np.asarray(image, float)
    if a.ndim != 2:
        raise ValueError("render needs a 2D array")
    lo, hi = float(a.min()), float(a.max())
    scaled = np.zeros(a.shape) if hi == lo else (a - lo) / (hi - lo)
    img = np.round(255 * scaled).astype(np.uint8)
    h, w = img.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes())
