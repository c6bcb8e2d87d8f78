"""On-disk formats: DHS1/PHS1 frame containers, CSV tables, P5 graymaps.

Container layout (all integers little-endian)::

    offset  size  field
    0       4     magic  b"DHS1" (measurements) or b"PHS1" (phases)
    4       2     version (u16, currently 1)
    6       4     n (u32)
    10      4     frame_count (u32)
    14      1     dtype (u8): 0 = complex64 interleaved re/im, 1 = float32
    15      1     flags (u8)
    16      16    reserved, zero
    32      ...   frame_count * n * n samples, row-major
"""
from __future__ import annotations

import csv
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import FormatError, IoError

HEADER = struct.Struct("<4sHIIBB16s")
VERSION = 1
DTYPES = {0: np.dtype("<c8"), 1: np.dtype("<f4")}
MAGIC_DTYPE = {b"DHS1": 0, b"PHS1": 1}


@dataclass(frozen=True)
class StreamHeader:
    magic: bytes
    n: int
    frame_count: int
    dtype_code: int
    flags: int = 0
    version: int = VERSION

    @property
    def dtype(self) -> np.dtype:
        return DTYPES[self.dtype_code]

    @property
    def frame_bytes(self) -> int:
        return self.n * self.n * self.dtype.itemsize

    def pack(self) -> bytes:
        return HEADER.pack(self.magic, self.version, self.n, self.frame_count,
                           self.dtype_code, self.flags, bytes(16))

    @classmethod
    def unpack(cls, raw: bytes) -> "StreamHeader":
        if len(raw) < HEADER.size:
            raise FormatError(f"header truncated: expected {HEADER.size} bytes, got {len(raw)}")
        magic, version, n, count, dtype_code, flags, reserved = HEADER.unpack(raw[:HEADER.size])
        if magic not in MAGIC_DTYPE:
            raise FormatError(f"unknown magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        if dtype_code != MAGIC_DTYPE[magic]:
            raise FormatError(f"dtype code {dtype_code} invalid for {magic.decode()}")
        if reserved != bytes(16):
            raise FormatError("reserved header bytes are not zero")
        return cls(magic, n, count, dtype_code, flags, version)


class FrameWriter:
    """Streaming writer; the file appears atomically on :meth:`close`.

    >>> with FrameWriter("y.dhs", b"DHS1", n=256) as w:   # doctest: +SKIP
    ...     w.write(frame)
    """

    def __init__(self, path, magic: bytes, n: int, flags: int = 0):
        if magic not in MAGIC_DTYPE:
            raise FormatError(f"unknown magic {magic!r}")
        self.path = Path(path)
        self.header = StreamHeader(magic, int(n), 0, MAGIC_DTYPE[magic], flags)
        self.count = 0
        try:
            fd, self._tmp = tempfile.mkstemp(dir=self.path.parent or ".", prefix=".tmp-")
            self._fh = os.fdopen(fd, "wb")
            self._fh.write(self.header.pack())
        except OSError as exc:
            raise IoError(f"cannot open {self.path} for writing: {exc}") from exc

    def write(self, frame: np.ndarray) -> None:
        frame = np.asarray(frame)
        if frame.shape != (self.header.n, self.header.n):
            raise FormatError(f"frame shape {frame.shape} does not match header n={self.header.n}")
        self._fh.write(np.ascontiguousarray(frame, dtype=self.header.dtype).tobytes())
        self.count += 1

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.seek(0)
        self._fh.write(StreamHeader(self.header.magic, self.header.n, self.count,
                                    self.header.dtype_code, self.header.flags).pack())
        self._fh.close()
        umask = os.umask(0)
        os.umask(umask)
        os.chmod(self._tmp, 0o666 & ~umask)
        os.replace(self._tmp, self.path)

    def abort(self) -> None:
        self._fh.close()
        if os.path.exists(self._tmp):
            os.unlink(self._tmp)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()


def write_frames(path, frames: Iterable[np.ndarray], n: int, magic: bytes = b"DHS1",
                 flags: int = 0) -> int:
    """Write all ``frames``; returns the frame count."""
    with FrameWriter(path, magic, n, flags) as w:
        for frame in frames:
            w.write(frame)
    return w.count


def write_phases(path, frames: Iterable[np.ndarray], n: int, flags: int = 0) -> int:
    return write_frames(path, frames, n, b"PHS1", flags)


def read_frames(path) -> tuple[StreamHeader, Iterator[np.ndarray]]:
    """Validate the container and return its header plus a lazy frame iterator."""
    path = Path(path)
    try:
        size = path.stat().st_size
        with open(path, "rb") as fh:
            header = StreamHeader.unpack(fh.read(HEADER.size))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    expected = HEADER.size + header.frame_count * header.frame_bytes
    if size != expected:
        raise FormatError(f"{path}: expected {expected} bytes, found {size}")

    def frames() -> Iterator[np.ndarray]:
        with open(path, "rb") as fh:
            fh.seek(HEADER.size)
            for _ in range(header.frame_count):
                buf = fh.read(header.frame_bytes)
                if len(buf) != header.frame_bytes:
                    raise FormatError(f"{path}: frame truncated")
                yield np.frombuffer(buf, dtype=header.dtype).reshape(header.n, header.n)

    return header, frames()


def write_csv(path, rows: Iterable, columns=("frame", "strehl", "seconds")) -> None:
    """CSV with a header row; floats written with 9 significant digits."""
    def fmt(v):
        if isinstance(v, (float, np.floating)):
            return f"{float(v):.9g}"
        return str(v)

    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_csv(path) -> tuple[list[str], np.ndarray]:
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            columns = next(reader)
            data = [[float(v) for v in row] for row in reader]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return columns, np.array(data, dtype=float).reshape(-1, len(columns))


def to_gray(field: np.ndarray, vmin: float, vmax: float) -> np.ndarray:
    if not vmax > vmin:
        raise FormatError(f"degenerate display window [{vmin}, {vmax}]")
    scaled = (np.asarray(field, dtype=float) - vmin) / (vmax - vmin)
    return np.round(np.clip(scaled, 0.0, 1.0) * 255).astype(np.uint8)


def write_raster(path, field: np.ndarray, vmin: float, vmax: float) -> None:
    """Binary 8-bit PGM (``P5``) with linear windowing of ``[vmin, vmax]``."""
    gray = to_gray(field, vmin, vmax)
    h, w = gray.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
            fh.write(gray.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_raster(path) -> np.ndarray:
    """Read a binary 8-bit PGM into a ``uint8`` array."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    tokens, pos = [], 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit graymaps are supported (maxval {maxval})")
    data = raw[pos:pos + w * h]
    if len(data) != w * h:
        raise FormatError(f"{path}: expected {w * h} pixel bytes, found {len(data)}")
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w).copy()
