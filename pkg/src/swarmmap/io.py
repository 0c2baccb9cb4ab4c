"""Byte-level file formats.

* PGM (netpbm greymap), plain ``P2`` and binary ``P5``. 16-bit samples are
  big-endian, as netpbm prescribes.
* Raw field dumps: ``b"SWRM"``, a version byte, width and height as
  little-endian uint32, then the densities as little-endian float64 in
  row-major order.
* Metrics CSV.
* Whole simulation states, as canonical JSON.
"""

from __future__ import annotations

import base64
import csv
import io as _io
import json
import math
import struct

import numpy as np

from .engine import MetricsRecord, SimulationState
from .errors import DomainError, FormatError
from .model import Habitat, Params, PheromoneField

_WHITESPACE = b" \t\n\r\v\f"


class _HeaderReader:
    def __init__(self, data: bytes, pos: int):
        self.data = data
        self.pos = pos

    def skip_space(self):
        data = self.data
        while self.pos < len(data):
            ch = data[self.pos:self.pos + 1]
            if ch == b"#":
                end = data.find(b"\n", self.pos)
                self.pos = len(data) if end < 0 else end + 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                break

    def integer(self, what: str) -> int:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.data) and 48 <= self.data[self.pos] <= 57:
            self.pos += 1
        if self.pos == start:
            if start >= len(self.data):
                raise FormatError(f"unexpected end of data reading {what}", offset=start)
            raise FormatError(f"expected a decimal integer for {what}", offset=start)
        if self.pos < len(self.data) and self.data[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            raise FormatError(f"junk after {what}", offset=self.pos)
        return int(self.data[start:self.pos])


def read_pgm(data: bytes) -> Habitat:
    """Parse a P2 or P5 greymap with ``maxval <= 255`` into a Habitat."""
    data = bytes(data)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise FormatError(f"bad magic {magic!r}, expected P2 or P5", offset=0)
    reader = _HeaderReader(data, 2)
    if len(data) > 2 and data[2:3] not in _WHITESPACE + b"#":
        raise FormatError("magic must be followed by whitespace", offset=2)
    width = reader.integer("width")
    height = reader.integer("height")
    maxval = reader.integer("maxval")
    if width < 3 or height < 3:
        raise FormatError(f"image must be at least 3x3, got {width}x{height}", offset=reader.pos)
    if not 1 <= maxval <= 255:
        raise FormatError(f"maxval must be in 1..255, got {maxval}", offset=reader.pos)
    count = width * height

    if magic == b"P5":
        if reader.pos >= len(data) or data[reader.pos:reader.pos + 1] not in _WHITESPACE:
            raise FormatError("expected one whitespace byte before the raster", offset=reader.pos)
        start = reader.pos + 1
        raster = data[start:]
        if len(raster) != count:
            raise FormatError(
                f"raster holds {len(raster)} bytes, expected {count}", offset=start
            )
        pixels = np.frombuffer(raster, dtype=np.uint8)
        bad = np.flatnonzero(pixels > maxval)
        if bad.size:
            raise FormatError(f"pixel {pixels[bad[0]]} exceeds maxval {maxval}", offset=start + int(bad[0]))
    else:
        if count > len(data) - reader.pos:
            raise FormatError(f"raster too short for {count} pixels", offset=len(data))
        pixels = np.empty(count, dtype=np.uint8)
        for i in range(count):
            reader.skip_space()
            offset = reader.pos
            value = reader.integer(f"pixel {i}")
            if value > maxval:
                raise FormatError(f"pixel {value} exceeds maxval {maxval}", offset=offset)
            pixels[i] = value
        reader.skip_space()
        if reader.pos != len(data):
            raise FormatError("trailing data after raster", offset=reader.pos)
    return Habitat(pixels.reshape(height, width))


def _normalise(sigma: np.ndarray, maxval: int) -> np.ndarray:
    top = float(sigma.max()) if sigma.size else 0.0
    if top <= 0:
        return np.zeros(sigma.shape, dtype=np.int64)
    scaled = np.floor(sigma * maxval / top + 0.5)
    return np.clip(scaled, 0, maxval).astype(np.int64)


def write_pgm(grid, mode: str = "raw8", plain: bool = False) -> bytes:
    """Encode a habitat or field as PGM.

    ``raw8`` writes integer grey values unchanged (habitats). ``norm8`` and
    ``norm16`` scale linearly so the largest value maps to 255 or 65535,
    rounding halves up. ``plain`` selects ASCII P2 instead of binary P5.
    """
    if isinstance(grid, Habitat):
        values = grid.grey.astype(np.float64)
    elif isinstance(grid, PheromoneField):
        values = grid.sigma
    else:
        values = np.asarray(grid, dtype=np.float64)
    if values.ndim != 2:
        raise DomainError(f"expected a 2-D grid, got shape {values.shape}")
    height, width = values.shape
    if mode == "raw8":
        if np.any(values != np.round(values)) or values.min() < 0 or values.max() > 255:
            raise DomainError("raw8 needs integer values in [0, 255]")
        maxval, pixels = 255, values.astype(np.int64)
    elif mode == "norm8":
        maxval, pixels = 255, _normalise(values, 255)
    elif mode == "norm16":
        maxval, pixels = 65535, _normalise(values, 65535)
    else:
        raise DomainError(f"unknown PGM mode {mode!r}")

    header = f"{'P2' if plain else 'P5'}\n{width} {height}\n{maxval}\n".encode("ascii")
    if plain:
        lines = (" ".join(str(v) for v in row) for row in pixels)
        return header + ("\n".join(lines) + "\n").encode("ascii")
    dtype = ">u2" if maxval > 255 else "u1"
    return header + pixels.astype(dtype).tobytes()


_RAW_MAGIC = b"SWRM"
_RAW_VERSION = 1
_RAW_HEADER = struct.Struct("<4sBII")


def write_field_raw(field: PheromoneField) -> bytes:
    sigma = field.sigma if isinstance(field, PheromoneField) else np.asarray(field, dtype=np.float64)
    height, width = sigma.shape
    header = _RAW_HEADER.pack(_RAW_MAGIC, _RAW_VERSION, width, height)
    return header + np.ascontiguousarray(sigma, dtype="<f8").tobytes()


def read_field_raw(data: bytes) -> PheromoneField:
    data = bytes(data)
    if len(data) < _RAW_HEADER.size:
        raise FormatError(
            f"header needs {_RAW_HEADER.size} bytes, got {len(data)}", offset=len(data)
        )
    magic, version, width, height = _RAW_HEADER.unpack_from(data)
    if magic != _RAW_MAGIC:
        raise FormatError(f"bad magic {magic!r}", offset=0)
    if version != _RAW_VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if width == 0 or height == 0:
        raise FormatError(f"empty field {width}x{height}", offset=5)
    expected = _RAW_HEADER.size + 8 * width * height
    if len(data) != expected:
        raise FormatError(
            f"expected {expected} bytes for a {width}x{height} field, got {len(data)}",
            offset=min(len(data), expected),
        )
    sigma = np.frombuffer(data, dtype="<f8", offset=_RAW_HEADER.size).reshape(height, width)
    bad = np.flatnonzero(~np.isfinite(sigma) | (sigma < 0))
    if bad.size:
        raise FormatError(
            f"density {sigma.flat[bad[0]]!r} is not finite and non-negative",
            offset=_RAW_HEADER.size + 8 * int(bad[0]),
        )
    return PheromoneField(sigma.astype(np.float64))


METRICS_HEADER = ("t", "total_pheromone", "spatial_entropy", "max_sigma", "on_target_ratio")
UNDEFINED = "undefined"


def _fmt(value: float) -> str:
    return f"{value:.9g}"


def write_metrics_csv(records) -> bytes:
    out = _io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(METRICS_HEADER)
    for rec in records:
        if rec.on_target_ratio is None:
            ratio = ""
        elif math.isnan(rec.on_target_ratio):
            ratio = UNDEFINED
        else:
            ratio = _fmt(rec.on_target_ratio)
        writer.writerow(
            [str(int(rec.t)), _fmt(rec.total_pheromone), _fmt(rec.spatial_entropy), _fmt(rec.max_sigma), ratio]
        )
    return out.getvalue().encode("ascii")


def read_metrics_csv(data: bytes) -> list[MetricsRecord]:
    try:
        rows = list(csv.reader(_io.StringIO(bytes(data).decode("ascii"), newline="")))
    except UnicodeDecodeError as exc:
        raise FormatError("metrics CSV must be ASCII", offset=exc.start) from None
    except csv.Error as exc:
        raise FormatError(f"malformed CSV: {exc}") from None
    if not rows or tuple(rows[0]) != METRICS_HEADER:
        raise FormatError("missing or wrong metrics header", line=1)
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(METRICS_HEADER):
            raise FormatError(f"expected {len(METRICS_HEADER)} columns, got {len(row)}", line=lineno)
        try:
            ratio = None if row[4] == "" else math.nan if row[4] == UNDEFINED else float(row[4])
            records.append(MetricsRecord(int(row[0]), float(row[1]), float(row[2]), float(row[3]), ratio))
        except ValueError as exc:
            raise FormatError(str(exc), line=lineno) from None
    return records


def dump_state(state: SimulationState) -> bytes:
    """Canonical serialisation; equal bytes mean the states step identically."""
    doc = {
        "t": state.t,
        "params": {k: getattr(state.params, k) for k in state.params.__dataclass_fields__},
        "habitat": base64.b64encode(write_pgm(state.habitat)).decode("ascii"),
        "field": base64.b64encode(write_field_raw(state.field)).decode("ascii"),
        "rows": state.rows.tolist(),
        "cols": state.cols.tolist(),
        "headings": state.headings.tolist(),
        "rng": state.rng.bit_generator.state,
        "last_deposit": state.last_deposit.hex(),
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("ascii")


def load_state(data: bytes) -> SimulationState:
    try:
        doc = json.loads(bytes(data).decode("ascii"))
        rng_state = doc["rng"]
        bit_generator = getattr(np.random, rng_state["bit_generator"])()
        bit_generator.state = rng_state
        return SimulationState(
            t=int(doc["t"]),
            habitat=read_pgm(base64.b64decode(doc["habitat"])),
            field=read_field_raw(base64.b64decode(doc["field"])),
            rows=np.array(doc["rows"], dtype=np.int64),
            cols=np.array(doc["cols"], dtype=np.int64),
            headings=np.array(doc["headings"], dtype=np.int64),
            params=Params(**doc["params"]),
            rng=np.random.Generator(bit_generator),
            last_deposit=float.fromhex(doc["last_deposit"]),
        )
    except FormatError:
        raise
    except (ValueError, KeyError, TypeError, AttributeError) as exc:
        raise FormatError(f"invalid state document: {exc}") from None
