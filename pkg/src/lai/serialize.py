"""Flat self-describing binary container for model parameters.

A file is ``MAGIC | uint64 header length | JSON header | raw array bytes``.
The header lists scalars plus array names, dtypes, and shapes; array data
follows in header order as little-endian C-contiguous bytes.  Writing is
byte-deterministic (sorted keys, no timestamps) and round-trips are
bit-exact, which npz cannot guarantee across runs.
"""

import json
import struct

import numpy as np

MAGIC = b"LAIPKG1\n"

_DTYPES = {"<f8": np.dtype("<f8"), "<i8": np.dtype("<i8"), "|u1": np.dtype("|u1")}


def save_bundle(path, scalars: dict, arrays: dict) -> None:
    """Write scalars (int/float/str/bool) and named float/int arrays."""
    entries = []
    blobs = []
    for name in arrays:
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype == np.float64:
            code = "<f8"
        elif arr.dtype in (np.int64, np.dtype("int64")):
            code = "<i8"
        elif arr.dtype == np.uint8:
            code = "|u1"
        else:
            raise TypeError(f"array {name!r}: unsupported dtype {arr.dtype}")
        arr = arr.astype(_DTYPES[code], copy=False)
        entries.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        blobs.append(arr.tobytes(order="C"))
    header = json.dumps(
        {"scalars": scalars, "arrays": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def load_bundle(path):
    """Read a container written by save_bundle; returns (scalars, arrays)."""
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a lai parameter file")
        (header_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays = {}
        for entry in header["arrays"]:
            dtype = _DTYPES[entry["dtype"]]
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = fh.read(count * dtype.itemsize)
            if len(data) != count * dtype.itemsize:
                raise ValueError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(data, dtype=dtype).reshape(shape).copy()
    return header["scalars"], arrays
