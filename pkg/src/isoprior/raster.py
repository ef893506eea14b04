"""Grid value types (soft fields, binary masks) and Netpbm PGM I/O."""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

DEFAULT_LAMBDA = 0.5


@dataclass(frozen=True)
class GridShape:
    height: int
    width: int

    def __post_init__(self):
        if int(self.height) < 1 or int(self.width) < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.height}x{self.width}")

    @property
    def size(self) -> int:
        return self.height * self.width

    def as_tuple(self) -> tuple[int, int]:
        return (self.height, self.width)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PredictionField:
    """Soft prediction with values in [0, 1] on a 2D grid.

    ``values[r, c]`` is the row-major pixel ``r * width + c``.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"field must be a non-empty 2D array, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("field values must lie in [0, 1]")
        object.__setattr__(self, "values", _frozen(v))

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape)

    def __eq__(self, other):
        if not isinstance(other, PredictionField):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2D array, got shape {v.shape}")
        if v.dtype != bool:
            if not np.all((v == 0) | (v == 1)):
                raise ValueError("mask values must be exactly 0 or 1")
            v = v.astype(bool)
        object.__setattr__(self, "values", _frozen(v))

    @property
    def shape(self) -> GridShape:
        return GridShape(*self.values.shape)

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return np.array_equal(self.values, other.values)


@dataclass(frozen=True)
class Threshold:
    value: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not 0.0 < float(self.value) < 1.0:
            raise ValueError(f"threshold must lie in (0, 1), got {self.value}")


def as_field_array(field) -> np.ndarray:
    if isinstance(field, PredictionField):
        return field.values
    return PredictionField(field).values


def as_mask_array(mask) -> np.ndarray:
    if isinstance(mask, BinaryMask):
        return mask.values
    return BinaryMask(mask).values


def _lam(t) -> float:
    if isinstance(t, Threshold):
        return float(t.value)
    return float(Threshold(t).value)


def threshold_field(field, t=DEFAULT_LAMBDA) -> BinaryMask:
    """Pixel is foreground iff its value strictly exceeds the threshold."""
    return BinaryMask(as_field_array(field) > _lam(t))


def mask_to_field(mask) -> PredictionField:
    return PredictionField(as_mask_array(mask).astype(np.float64))


# --------------------------------------------------------------------------
# PGM

class PGMError(ValueError):
    """Malformed PGM input; ``offset`` is the byte position of the problem."""

    kind = "malformed header"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{self.kind}: {message} (at byte {offset})")
        self.offset = offset


class PGMHeaderError(PGMError):
    kind = "malformed header"


class PGMTruncatedError(PGMError):
    kind = "truncated payload"


class PGMMaxvalError(PGMError):
    kind = "invalid maxval"


_WS = b" \t\n\r\v\f"


def _header_tokens(data: bytes, count: int, pos: int) -> tuple[list[tuple[bytes, int]], int]:
    # whitespace-delimited tokens; '#' starts a comment running to end of line
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and (data[pos] in _WS or data[pos] == ord("#")):
            if data[pos] == ord("#"):
                while pos < n and data[pos] not in b"\r\n":
                    pos += 1
            else:
                pos += 1
        if pos >= n:
            raise PGMHeaderError("unexpected end of header", pos)
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append((data[start:pos], start))
    return tokens, pos


def _parse_int(tok: bytes, offset: int, what: str) -> int:
    if not re.fullmatch(rb"[0-9]+", tok):
        raise PGMHeaderError(f"{what} is not a non-negative integer: {tok!r}", offset)
    return int(tok)


def read_pgm(data: bytes) -> PredictionField:
    """Parse a P2 (ASCII) or P5 (binary) PGM into a field scaled by 1/maxval."""
    data = bytes(data)
    if data[:2] not in (b"P2", b"P5"):
        raise PGMHeaderError(f"bad magic {data[:2]!r}, expected P2 or P5", 0)
    magic = data[:2]
    if len(data) > 2 and data[2] not in _WS and data[2] != ord("#"):
        raise PGMHeaderError("magic number must be followed by whitespace", 2)
    tokens, pos = _header_tokens(data, 3, 2)
    width = _parse_int(tokens[0][0], tokens[0][1], "width")
    height = _parse_int(tokens[1][0], tokens[1][1], "height")
    maxval = _parse_int(tokens[2][0], tokens[2][1], "maxval")
    if width < 1 or height < 1:
        raise PGMHeaderError(f"dimensions must be positive, got {width}x{height}", tokens[0][1])
    if maxval == 0 or maxval > 65535:
        raise PGMMaxvalError(f"maxval must be in [1, 65535], got {maxval}", tokens[2][1])
    npix = width * height

    if magic == b"P5":
        if pos >= len(data) or data[pos] not in _WS:
            raise PGMHeaderError("expected single whitespace byte before payload", pos)
        pos += 1
        nbytes = npix * (2 if maxval > 255 else 1)
        payload = data[pos:pos + nbytes]
        if len(payload) < nbytes:
            raise PGMTruncatedError(
                f"expected {nbytes} payload bytes, found {len(payload)}", pos + len(payload))
        dtype = ">u2" if maxval > 255 else "u1"
        samples = np.frombuffer(payload, dtype=dtype).astype(np.int64)
        bad = np.flatnonzero(samples > maxval)
        if bad.size:
            width_b = 2 if maxval > 255 else 1
            raise PGMHeaderError(f"sample exceeds maxval {maxval}", pos + int(bad[0]) * width_b)
    else:
        samples = []
        n = len(data)
        for _ in range(npix):
            while pos < n and data[pos] in _WS:
                pos += 1
            if pos >= n:
                raise PGMTruncatedError(f"expected {npix} samples, found {len(samples)}", pos)
            start = pos
            while pos < n and data[pos] not in _WS:
                pos += 1
            v = _parse_int(data[start:pos], start, "sample")
            if v > maxval:
                raise PGMHeaderError(f"sample exceeds maxval {maxval}", start)
            samples.append(v)
        samples = np.asarray(samples, dtype=np.int64)

    values = samples.reshape(height, width).astype(np.float64) / maxval
    return PredictionField(values)


def write_pgm(field, maxval: int = 255) -> bytes:
    """Encode as binary P5 with no comments; values are rounded to the nearest level."""
    if isinstance(field, BinaryMask):
        v = field.values.astype(np.float64)
    else:
        v = as_field_array(field)
    maxval = int(maxval)
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval must be in [1, 65535], got {maxval}")
    q = np.rint(v * maxval).astype(np.int64)
    h, w = v.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return header + q.astype(dtype).tobytes()


def load_pgm(path) -> PredictionField:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def save_pgm(path, field, maxval: int = 255) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(field, maxval))
