"""File formats: reservoir snapshots, dataset CSV and the binary dataset cache.

Snapshot layout (all integers and floats little-endian)::

    magic      8 bytes  b"RNGRCSNP"
    version    uint16
    variant    uint8    RNG variant code 0..7, or 255 for ESN
    n, d       uint32, uint32
    n_params   uint16
    params     n_params x float64
    w_in       n*d float64, row-major
    w_rec      n*n float64, row-major
    state      n float64
    ESN:  bias n float64
    RNG:  mask ceil(n/8) bytes, bit i of the packed little-endian bit array
    crc32      uint32 over every preceding byte

Dataset cache layout::

    magic      8 bytes  b"RNGRCDAT"
    version    uint16
    meta_len   uint32, then meta_len bytes of UTF-8 JSON
    K, d       uint32, uint32
    X          K*d float64, row-major
    y          K float64
    crc32      uint32
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
import struct
import zlib

import numpy as np

from rngrc.datasets import LabeledSequence
from rngrc.esn import EsnParams, EsnReservoir
from rngrc.rng import RngParams, RngReservoir, RngVariant

SNAPSHOT_MAGIC = b"RNGRCSNP"
DATA_MAGIC = b"RNGRCDAT"
VERSION = 1
ESN_ID = 255

_ESN_FIELDS = ("radius", "sparsity", "gamma", "input_scaling", "input_bias")
_ESN_META = ("radius_scaled", "radius_sparse", "redraws")
_RNG_FIELDS = ("alpha", "beta", "beta_masked", "gamma", "eta")
_F64 = np.dtype("<f8")


class FormatError(ValueError):
    """A file is not a valid snapshot or cache."""


class VersionError(FormatError):
    pass


class ChecksumError(FormatError):
    """Truncated or corrupted file."""


class VariantError(FormatError):
    """Snapshot holds a different reservoir kind than requested."""


def _seal(body):
    return body + struct.pack("<I", zlib.crc32(body))


def _open(data, magic):
    if len(data) < len(magic) + 6:
        raise ChecksumError("file is truncated")
    if data[:len(magic)] != magic:
        raise FormatError("bad magic tag")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    (version,) = struct.unpack_from("<H", data, len(magic))
    if version != VERSION:
        raise VersionError(f"format version {version}, this build reads {VERSION}")
    if zlib.crc32(body) != crc:
        raise ChecksumError("checksum mismatch (truncated or corrupted file)")
    return body, len(magic) + 2


class _Reader:
    def __init__(self, buf, pos):
        self.buf, self.pos = buf, pos

    def unpack(self, fmt):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.buf):
            raise ChecksumError("file is truncated")
        out = struct.unpack_from(fmt, self.buf, self.pos)
        self.pos += size
        return out

    def floats(self, count, shape=None):
        size = count * 8
        if self.pos + size > len(self.buf):
            raise ChecksumError("file is truncated")
        a = np.frombuffer(self.buf, _F64, count, self.pos).astype(np.float64)
        self.pos += size
        return a.reshape(shape) if shape else a

    def raw(self, size):
        if self.pos + size > len(self.buf):
            raise ChecksumError("file is truncated")
        out = self.buf[self.pos:self.pos + size]
        self.pos += size
        return out

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError("trailing bytes after payload")


def _f64(a):
    return np.ascontiguousarray(a, dtype=_F64).tobytes()


def snapshot_bytes(r):
    """Serialize an ESN or RNG reservoir."""
    if isinstance(r, EsnReservoir):
        vid = ESN_ID
        params = [getattr(r.params, f) for f in _ESN_FIELDS]
        params += [float(r.meta.get(k, np.nan)) for k in _ESN_META]
    elif isinstance(r, RngReservoir):
        vid = int(r.variant)
        params = [getattr(r.params, f) for f in _RNG_FIELDS]
    else:
        raise TypeError(f"cannot snapshot {type(r).__name__}")
    parts = [SNAPSHOT_MAGIC, struct.pack("<HBIIH", VERSION, vid, r.n, r.d, len(params)),
             _f64(params), _f64(r.w_in), _f64(r.w_rec), _f64(r.state)]
    if vid == ESN_ID:
        parts.append(_f64(r.bias))
    else:
        parts.append(np.packbits(r.mask.astype(np.uint8), bitorder="little").tobytes())
    return _seal(b"".join(parts))


def _expected_id(expect):
    if expect is None:
        return None
    if isinstance(expect, str) and expect.upper() == "ESN":
        return ESN_ID
    return int(RngVariant.parse(expect) if isinstance(expect, str) else RngVariant(expect))


def snapshot_from_bytes(data, expect=None):
    """Inverse of :func:`snapshot_bytes`.

    ``expect`` ("ESN", a variant label or a :class:`RngVariant`) makes a
    snapshot of any other kind raise :class:`VariantError`.
    """
    data = bytes(data)
    body, pos = _open(data, SNAPSHOT_MAGIC)
    rd = _Reader(body, pos)
    vid, n, d, n_params = rd.unpack("<BIIH")
    want = _expected_id(expect)
    if want is not None and vid != want:
        have = "ESN" if vid == ESN_ID else _variant_label(vid)
        need = "ESN" if want == ESN_ID else _variant_label(want)
        raise VariantError(f"snapshot holds {have}, expected {need}")
    params = rd.floats(n_params)
    w_in = rd.floats(n * d, (n, d))
    w_rec = rd.floats(n * n, (n, n))
    state = rd.floats(n)
    if vid == ESN_ID:
        if n_params != len(_ESN_FIELDS) + len(_ESN_META):
            raise FormatError("ESN parameter block has the wrong size")
        bias = rd.floats(n)
        rd.done()
        p = EsnParams(n=n, d=d, **dict(zip(_ESN_FIELDS, params.tolist())))
        meta = dict(zip(_ESN_META, params[len(_ESN_FIELDS):].tolist()))
        meta["redraws"] = int(meta["redraws"])
        return EsnReservoir(w_in, w_rec, p, state, meta, bias)
    if n_params != len(_RNG_FIELDS):
        raise FormatError("RNG parameter block has the wrong size")
    variant = RngVariant(vid) if vid in RngVariant._value2member_map_ else None
    if variant is None:
        raise FormatError(f"unknown variant id {vid}")
    bits = np.frombuffer(rd.raw((n + 7) // 8), np.uint8)
    rd.done()
    mask = np.unpackbits(bits, count=n, bitorder="little").astype(bool)
    p = RngParams(**dict(zip(_RNG_FIELDS, params.tolist())))
    return RngReservoir(w_in, w_rec, mask, p, variant, state)


def _variant_label(vid):
    try:
        return RngVariant(vid).label
    except ValueError:
        return f"id {vid}"


def save_snapshot(r, path):
    _atomic_write(path, snapshot_bytes(r))


def load_snapshot(path, expect=None):
    with open(path, "rb") as fh:
        return snapshot_from_bytes(fh.read(), expect)


def _atomic_write(path, data):
    tmp = f"{path}.tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode, **({} if mode == "wb" else {"newline": "", "encoding": "utf-8"})) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _meta_json(meta):
    return json.dumps(meta, sort_keys=True, separators=(",", ":"), default=_plain)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, (tuple, np.ndarray)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def sequence_csv(seq):
    """CSV text: a ``# meta:`` JSON comment, a header row, one row per step."""
    buf = _io.StringIO()
    buf.write(f"# meta: {_meta_json(seq.meta)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(seq.columns)
    for row, target in zip(seq.X, seq.y):
        w.writerow([repr(float(v)) for v in row] + [repr(float(target))])
    return buf.getvalue()


def sequence_from_csv(text):
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# meta: "):
        raise FormatError("missing '# meta:' header line")
    try:
        meta = json.loads(lines[0][len("# meta: "):])
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad meta header: {exc}") from None
    rows = list(csv.reader(lines[1:]))
    if not rows:
        raise FormatError("missing column header")
    header, body = rows[0], rows[1:]
    if len(header) < 2:
        raise FormatError("need at least one input column and a target column")
    try:
        a = np.array([[float(v) for v in r] for r in body], dtype=np.float64)
    except ValueError as exc:
        raise FormatError(f"non-numeric value: {exc}") from None
    if body and a.shape[1] != len(header):
        raise FormatError("rows do not match the header width")
    a = a.reshape(-1, len(header))
    meta.setdefault("columns", header)
    return LabeledSequence(a[:, :-1], a[:, -1], meta)


def write_sequence_csv(seq, path):
    _atomic_write(path, sequence_csv(seq))


def read_sequence_csv(path):
    with open(path, encoding="utf-8") as fh:
        return sequence_from_csv(fh.read())


def sequence_bytes(seq):
    meta = _meta_json(seq.meta).encode("utf-8")
    K, d = seq.X.shape
    return _seal(b"".join([DATA_MAGIC, struct.pack("<HI", VERSION, len(meta)), meta,
                           struct.pack("<II", K, d), _f64(seq.X), _f64(seq.y)]))


def sequence_from_bytes(data):
    data = bytes(data)
    body, pos = _open(data, DATA_MAGIC)
    rd = _Reader(body, pos)
    (meta_len,) = rd.unpack("<I")
    meta = json.loads(rd.raw(meta_len).decode("utf-8"))
    K, d = rd.unpack("<II")
    X = rd.floats(K * d, (K, d))
    y = rd.floats(K)
    rd.done()
    return LabeledSequence(X, y, meta)


def write_sequence_cache(seq, path):
    _atomic_write(path, sequence_bytes(seq))


def read_sequence_cache(path):
    with open(path, "rb") as fh:
        return sequence_from_bytes(fh.read())
