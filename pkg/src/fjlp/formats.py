"""On-disk formats: vector files (CSV and FJLP binary) and transform specs.

FJLP binary layout, all little-endian: magic "FJLP", u16 version=1, u8 dtype=0
(float64), u8 reserved=0, u64 count, u64 dim, then count*dim values. Both
vector formats round-trip float64 bit-exactly.
"""

import json
import struct

import numpy as np

from .embed import Transform, plan

__all__ = [
    "FormatError",
    "save_vectors_csv",
    "load_vectors_csv",
    "save_vectors_fjlp",
    "load_vectors_fjlp",
    "save_vectors",
    "load_vectors",
    "transform_spec",
    "save_transform_spec",
    "load_transform_spec",
]

_MAGIC = b"FJLP"
_HEADER = struct.Struct("<4sHBBQQ")


class FormatError(Exception):
    """Malformed vector file or transform spec."""


def _as_matrix(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise FormatError(f"expected a vector or matrix, got ndim={X.ndim}")
    return X


def save_vectors_csv(path, X):
    X = _as_matrix(X)
    # %.17g is lossless for float64
    np.savetxt(path, X, fmt="%.17g", delimiter=",")


def load_vectors_csv(path):
    try:
        X = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"bad CSV vector file {path}: {exc}") from exc
    return X


def save_vectors_fjlp(path, X):
    X = np.ascontiguousarray(_as_matrix(X), dtype="<f8")
    count, dim = X.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, 0, 0, count, dim))
        fh.write(X.tobytes())


def load_vectors_fjlp(path):
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise FormatError(f"{path}: truncated header")
        magic, version, dtype, _reserved, count, dim = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != 1:
            raise FormatError(f"{path}: unsupported version {version}")
        if dtype != 0:
            raise FormatError(f"{path}: unsupported dtype code {dtype}")
        payload = fh.read(8 * count * dim)
    if len(payload) != 8 * count * dim:
        raise FormatError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f8").reshape(count, dim).copy()


def _is_csv(path, fmt=None):
    if fmt is not None:
        if fmt not in ("csv", "fjlp"):
            raise FormatError(f"unknown vector format {fmt!r}")
        return fmt == "csv"
    return str(path).lower().endswith(".csv")


def save_vectors(path, X, fmt=None):
    (save_vectors_csv if _is_csv(path, fmt) else save_vectors_fjlp)(path, X)


def load_vectors(path, fmt=None):
    return (load_vectors_csv if _is_csv(path, fmt) else load_vectors_fjlp)(path)


def transform_spec(T):
    return {
        "version": 1,
        "d": T.d_orig,
        "d_pad": T.d_pad,
        "k": T.k,
        "p": T.p,
        "seed": T.seed,
        "field_m": T.A.field.degree,
        "field_poly": hex(T.A.field.modulus),
        "convention": "signed",
    }


def save_transform_spec(path, T):
    with open(path, "w") as fh:
        json.dump(transform_spec(T), fh, indent=2)
        fh.write("\n")


def load_transform_spec(path):
    """Rebuild a transform from its spec; derived fields are cross-checked."""
    with open(path) as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("version", "d", "k", "p", "seed"):
        if key not in spec:
            raise FormatError(f"{path}: missing key {key!r}")
    if spec["version"] != 1:
        raise FormatError(f"{path}: unsupported spec version {spec['version']}")
    # strict=False: the gate belongs to planning; a stored spec is replayed as-is
    T = plan(spec["d"], spec["k"], spec["p"], spec["seed"], strict=False)
    for key, got in (
        ("d_pad", T.d_pad),
        ("field_m", T.A.field.degree),
        ("field_poly", hex(T.A.field.modulus)),
    ):
        if key in spec and spec[key] != got:
            raise FormatError(f"{path}: {key} = {spec[key]!r} inconsistent with construction ({got!r})")
    return T
