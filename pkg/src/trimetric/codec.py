"""Deterministic variable-width LZW codec.

The compressed size produced here is the computable stand-in for the
description length of an artifact. Parameters are fixed so that sizes are
bit-identical on every platform:

* initial dictionary: the 256 single bytes
* code width starts at 9 bits and grows by one each time the dictionary
  size reaches ``2**width``; it never exceeds 16
* the dictionary freezes (no reset) once it holds ``2**16`` entries
* codes are packed MSB-first and the stream is zero-padded to a byte

Because exactly one entry is added per emitted code until the freeze, the
width of the k-th code depends only on ``k``. The decoder recomputes the
schedule without any side channel.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import MalformedBlob

FORMAT_VERSION = 1
MAGIC = b"TMLZ"
HEADER_BITS = 64
MAX_ENTRIES = 1 << 16
_WIRE_HEADER = struct.Struct("<4sIQ")


def code_widths(n_codes):
    """Bit width of each of the first ``n_codes`` codes of any stream."""
    k = np.arange(n_codes, dtype=np.int64)
    size = np.minimum(256 + k, MAX_ENTRIES)
    widths = np.full(n_codes, 9, dtype=np.int64)
    for bit in range(9, 16):
        widths += size >= (1 << bit)
    return widths


@dataclass(frozen=True)
class CompressedBlob:
    """LZW code stream plus the framing needed to invert it."""

    codes: tuple
    original_len: int
    format_version: int = FORMAT_VERSION

    @property
    def code_width_schedule(self):
        return list(zip(self.codes, code_widths(len(self.codes)).tolist()))

    @property
    def payload_bits(self):
        return int(code_widths(len(self.codes)).sum())

    def to_bytes(self):
        """Wire format: magic, u32 version, u64 length, packed codes."""
        header = _WIRE_HEADER.pack(MAGIC, self.format_version, self.original_len)
        return header + _pack_codes(self.codes)

    @classmethod
    def from_bytes(cls, raw):
        raw = bytes(raw)
        if len(raw) < _WIRE_HEADER.size:
            raise MalformedBlob("blob shorter than its header")
        magic, version, original_len = _WIRE_HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise MalformedBlob(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise MalformedBlob(f"unsupported format version {version}")
        codes = _unpack_codes(raw[_WIRE_HEADER.size:])
        return cls(codes=codes, original_len=original_len, format_version=version)


def _pack_codes(codes):
    if not codes:
        return b""
    widths = code_widths(len(codes))
    bits = np.unpackbits(
        np.asarray(codes, dtype=">u2").view(np.uint8)).reshape(-1, 16)
    used = np.arange(16)[None, :] >= (16 - widths)[:, None]
    return np.packbits(bits[used]).tobytes()


def _unpack_codes(payload):
    total_bits = 8 * len(payload)
    if total_bits == 0:
        return ()
    # upper bound on the code count: no code is narrower than 9 bits
    widths = code_widths(total_bits // 9 + 1)
    ends = np.cumsum(widths)
    n_codes = int(np.searchsorted(ends, total_bits, side="right"))
    if total_bits - (int(ends[n_codes - 1]) if n_codes else 0) >= 8:
        raise MalformedBlob("trailing bits beyond byte padding")
    widths = widths[:n_codes]
    starts = ends[:n_codes] - widths
    # every code lies inside the 24-bit window at its first byte
    buf = np.concatenate([np.frombuffer(payload, dtype=np.uint8), np.zeros(2, np.uint8)])
    first = starts >> 3
    window = (buf[first].astype(np.int64) << 16) | (buf[first + 1].astype(np.int64) << 8) | buf[first + 2]
    values = (window >> (24 - (starts & 7) - widths)) & ((1 << widths) - 1)
    return tuple(values.tolist())


def compress(data):
    """Compress a byte sequence; returns a :class:`CompressedBlob`."""
    data = bytes(data)
    if not data:
        return CompressedBlob(codes=(), original_len=0)
    table = {}
    next_code = 256
    codes = []
    emit = codes.append
    w = data[0]
    for b in data[1:]:
        key = (w << 8) | b
        c = table.get(key)
        if c is not None:
            w = c
            continue
        emit(w)
        if next_code < MAX_ENTRIES:
            table[key] = next_code
            next_code += 1
        w = b
    emit(w)
    return CompressedBlob(codes=tuple(codes), original_len=len(data))


def decompress(blob):
    """Invert :func:`compress`. Accepts a blob or its wire-format bytes.

    Raises :class:`MalformedBlob` on out-of-range codes, truncated streams
    or a length mismatch against the header.
    """
    if isinstance(blob, (bytes, bytearray, memoryview)):
        blob = CompressedBlob.from_bytes(blob)
    entries = [bytes((i,)) for i in range(256)]
    append = entries.append
    out = bytearray()
    prev = None
    n = 256
    for code in blob.codes:
        if code < n:
            if code < 0:
                raise MalformedBlob(f"code {code} outside dictionary of {n} entries")
            entry = entries[code]
        elif code == n and prev is not None and n < MAX_ENTRIES:
            entry = prev + prev[:1]
        else:
            raise MalformedBlob(f"code {code} outside dictionary of {n} entries")
        out += entry
        if prev is not None and n < MAX_ENTRIES:
            append(prev + entry[:1])
            n += 1
        prev = entry
    # every code yields at least one byte, so overruns show up here
    if len(out) > blob.original_len:
        raise MalformedBlob("codes remain after the declared length")
    if len(out) != blob.original_len:
        raise MalformedBlob(
            f"decoded {len(out)} bytes, header declares {blob.original_len}")
    return bytes(out)


def compressed_size_bits(data):
    """Payload bits plus the 64-bit header (version and original length)."""
    return compress(data).payload_bits + HEADER_BITS
