"""Label volumes and a deliberately small NRRD reader/writer.

Supports the slice of NRRD that 3D Slicer segmentation exports actually use:
3-D, axis-aligned volumes with raw / ascii / gzip encodings and uint8 /
uint16 / int16 / float samples. Segment metadata travels in ``SegmentN_*``
key-value fields, the Slicer convention.

Values are voxel label IDs; label 0 is background. Geometry is carried as
per-axis spacing (mm/voxel) plus the world position of the center of voxel
(0, 0, 0). Flat payloads are ordered x-fastest, matching the NRRD layout
for ``sizes: nx ny nz``.
"""

from __future__ import annotations

import gzip
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

DIAGONAL_TOL = 1e-9

_MAGIC_RE = re.compile(rb"^NRRD000([1-5])\s*$")
_VECTOR_RE = re.compile(r"\(([^)]*)\)")

_TYPE_ALIASES = {
    "uint8": "uint8", "uchar": "uint8", "unsigned char": "uint8", "uint8_t": "uint8",
    "uint16": "uint16", "ushort": "uint16", "unsigned short": "uint16",
    "unsigned short int": "uint16", "uint16_t": "uint16",
    "int16": "int16", "short": "int16", "short int": "int16",
    "signed short": "int16", "signed short int": "int16", "int16_t": "int16",
    "float": "float", "f32": "float",
}
_TYPE_DTYPES = {"uint8": np.uint8, "uint16": np.uint16, "int16": np.int16, "float": np.float32}
_DTYPE_TYPES = {np.dtype(np.uint8): "uint8", np.dtype(np.uint16): "uint16",
                np.dtype(np.int16): "int16", np.dtype(np.float32): "float"}
_ENCODING_ALIASES = {"raw": "raw", "ascii": "ascii", "txt": "ascii", "text": "ascii",
                     "gzip": "gzip", "gz": "gzip"}


class VolumeFormatError(ValueError):
    """Raised for malformed or unsupported NRRD content."""


@dataclass
class NrrdHeader:
    version: int
    dimension: int
    sizes: tuple[int, int, int]
    sample_type: str
    encoding: str
    endianness: str
    space_directions: np.ndarray  # row i = world step of index axis i, mm
    space_origin: np.ndarray
    custom_fields: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        self.space_directions = np.asarray(self.space_directions, dtype=float).reshape(3, 3)
        self.space_origin = np.asarray(self.space_origin, dtype=float).reshape(3)

    @property
    def spacing(self) -> np.ndarray:
        return np.diagonal(self.space_directions).copy()

    @property
    def dtype(self) -> np.dtype:
        base = np.dtype(_TYPE_DTYPES[self.sample_type])
        if base.itemsize == 1:
            return base
        return base.newbyteorder("<" if self.endianness == "little" else ">")


@dataclass
class Segment:
    name: str
    label_value: int
    color: tuple[float, float, float] | None = None


@dataclass
class SegmentTable:
    entries: list[Segment] = field(default_factory=list)

    def __post_init__(self):
        values = [e.label_value for e in self.entries]
        if len(set(values)) != len(values):
            raise VolumeFormatError("segment label values must be unique")
        if any(v == 0 for v in values):
            raise VolumeFormatError("segment label value 0 is reserved for background")

    def by_label(self) -> dict[int, Segment]:
        return {e.label_value: e for e in self.entries}

    def name_of(self, label: int) -> str:
        for e in self.entries:
            if e.label_value == label:
                return e.name
        return f"label_{label}"


@dataclass
class LabelVolume:
    """Dense 3-D grid of anatomy label IDs with axis-aligned geometry."""

    dims: tuple[int, int, int]
    spacing: np.ndarray
    origin: np.ndarray
    labels: np.ndarray  # shape == dims; integer dtype; 0 = background

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing = np.asarray(self.spacing, dtype=float).reshape(3)
        self.origin = np.asarray(self.origin, dtype=float).reshape(3)
        if any(d < 1 for d in self.dims):
            raise VolumeFormatError(f"dims must be >= 1, got {self.dims}")
        if np.any(self.spacing <= 0):
            raise VolumeFormatError(f"spacing must be positive, got {self.spacing.tolist()}")
        self.labels = np.asarray(self.labels)
        if self.labels.dtype.kind not in "ui":
            raise VolumeFormatError(f"labels must be integers, got {self.labels.dtype}")
        if self.labels.size != self.dims[0] * self.dims[1] * self.dims[2]:
            raise VolumeFormatError("labels length does not match dims")
        self.labels = self.labels.reshape(self.dims)
        if self.labels.dtype.kind == "i" and self.labels.size and int(self.labels.min()) < 0:
            raise VolumeFormatError("negative label values are not allowed")

    @property
    def voxel_volume_mm3(self) -> float:
        return float(self.spacing[0] * self.spacing[1] * self.spacing[2])

    def index_to_world(self, idx) -> np.ndarray:
        return self.origin + np.asarray(idx, dtype=float) * self.spacing

    def world_to_index(self, point) -> np.ndarray:
        return (np.asarray(point, dtype=float) - self.origin) / self.spacing

    def present_labels(self) -> list[int]:
        vals = np.unique(self.labels)
        return [int(v) for v in vals if v != 0]

    def copy(self) -> "LabelVolume":
        return LabelVolume(self.dims, self.spacing.copy(), self.origin.copy(),
                           self.labels.copy())


def _normalize_field_key(key: str) -> str:
    return re.sub(r"[\s_-]+", "", key.strip().lower())


def _parse_vector_list(value: str, what: str) -> np.ndarray:
    groups = _VECTOR_RE.findall(value)
    if len(groups) != 3:
        raise VolumeFormatError(f"{what}: expected 3 parenthesized vectors, got {value!r}")
    rows = []
    for g in groups:
        parts = [p for p in re.split(r"[,\s]+", g.strip()) if p]
        if len(parts) != 3:
            raise VolumeFormatError(f"{what}: expected 3 components per vector in {value!r}")
        rows.append([float(p) for p in parts])
    return np.array(rows)


def _parse_single_vector(value: str, what: str) -> np.ndarray:
    groups = _VECTOR_RE.findall(value)
    if len(groups) != 1:
        raise VolumeFormatError(f"{what}: expected one parenthesized vector, got {value!r}")
    parts = [p for p in re.split(r"[,\s]+", groups[0].strip()) if p]
    if len(parts) != 3:
        raise VolumeFormatError(f"{what}: expected 3 components, got {value!r}")
    return np.array([float(p) for p in parts])


def parse_nrrd_header(data: bytes, *, enable_gzip: bool = True) -> NrrdHeader:
    """Parse the header section of an in-memory NRRD file.

    Standard fields are matched case-insensitively; anything unrecognized is
    preserved verbatim (in order) in ``custom_fields``. Rejects non-3-D data,
    non-axis-aligned space directions, unsupported sample types/encodings and
    detached data files.
    """
    header, _ = _parse_header_and_offset(data, enable_gzip=enable_gzip)
    return header


def _parse_header_and_offset(data: bytes, *, enable_gzip: bool) -> tuple[NrrdHeader, int]:
    if not isinstance(data, (bytes, bytearray, memoryview)):
        raise TypeError("parse_nrrd_header expects bytes")
    data = bytes(data)
    nl = data.find(b"\n")
    if nl < 0:
        raise VolumeFormatError("truncated file: no newline after magic")
    magic = data[:nl].rstrip(b"\r")
    m = _MAGIC_RE.match(magic)
    if m is None:
        raise VolumeFormatError(f"bad magic line {magic!r}; expected NRRD0001..NRRD0005")
    version = int(m.group(1))

    fields: dict[str, str] = {}
    custom: dict[str, str] = {}
    pos = nl + 1
    while True:
        end = data.find(b"\n", pos)
        if end < 0:
            raise VolumeFormatError("header not terminated by a blank line")
        raw_line = data[pos:end].rstrip(b"\r")
        pos = end + 1
        if raw_line == b"":
            break
        try:
            line = raw_line.decode("ascii")
        except UnicodeDecodeError as exc:
            raise VolumeFormatError(f"non-ascii header line: {raw_line!r}") from exc
        if line.startswith("#"):
            continue
        if ":=" in line:
            key, value = line.split(":=", 1)
            custom[key] = value
            continue
        if ":" not in line:
            raise VolumeFormatError(f"malformed header line {line!r}")
        key, value = line.split(":", 1)
        norm = _normalize_field_key(key)
        value = value.strip()
        if norm in ("type", "dimension", "sizes", "encoding", "endian",
                    "spacedirections", "spaceorigin", "datafile"):
            fields[norm] = value
        else:
            custom[key.strip()] = value

    if "datafile" in fields:
        raise VolumeFormatError("detached data files are not supported")
    if "dimension" not in fields:
        raise VolumeFormatError("missing required field: dimension")
    dimension = int(fields["dimension"])
    if dimension != 3:
        raise VolumeFormatError(f"unsupported dimension {dimension}; only 3-D volumes are handled")
    if "sizes" not in fields:
        raise VolumeFormatError("missing required field: sizes")
    sizes = tuple(int(s) for s in fields["sizes"].split())
    if len(sizes) != 3 or any(s < 1 for s in sizes):
        raise VolumeFormatError(f"sizes must be 3 positive integers, got {fields['sizes']!r}")
    if "type" not in fields:
        raise VolumeFormatError("missing required field: type")
    type_key = fields["type"].strip().lower()
    if type_key not in _TYPE_ALIASES:
        raise VolumeFormatError(f"unsupported sample type {fields['type']!r}")
    sample_type = _TYPE_ALIASES[type_key]
    encoding_key = fields.get("encoding", "").strip().lower()
    if encoding_key not in _ENCODING_ALIASES:
        raise VolumeFormatError(f"unsupported encoding {fields.get('encoding')!r}")
    encoding = _ENCODING_ALIASES[encoding_key]
    if encoding == "gzip" and not enable_gzip:
        raise VolumeFormatError("gzip encoding support is disabled in this configuration")
    endianness = fields.get("endian", "little").strip().lower()
    if endianness not in ("little", "big"):
        raise VolumeFormatError(f"unsupported endian {fields.get('endian')!r}")

    if "spacedirections" in fields:
        directions = _parse_vector_list(fields["spacedirections"], "space directions")
    else:
        directions = np.eye(3)
    off_diag = directions - np.diag(np.diagonal(directions))
    if np.abs(off_diag).max() > DIAGONAL_TOL:
        raise VolumeFormatError(
            "space directions are not axis-aligned "
            f"(max off-diagonal {np.abs(off_diag).max():g} > {DIAGONAL_TOL:g})")
    if np.any(np.diagonal(directions) <= 0):
        raise VolumeFormatError("space directions must have positive diagonal (no axis flips)")
    if "spaceorigin" in fields:
        origin = _parse_single_vector(fields["spaceorigin"], "space origin")
    else:
        origin = np.zeros(3)

    header = NrrdHeader(version=version, dimension=dimension, sizes=sizes,
                        sample_type=sample_type, encoding=encoding, endianness=endianness,
                        space_directions=directions, space_origin=origin,
                        custom_fields=custom)
    return header, pos


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_nrrd_header(header: NrrdHeader) -> bytes:
    """Serialize a header in the canonical field order used by write_nrrd.

    The emitted form is a fixed point: parsing and re-emitting reproduces the
    bytes exactly.
    """
    d = header.space_directions
    lines = [
        f"NRRD000{header.version}",
        f"type: {header.sample_type}",
        f"dimension: {header.dimension}",
        "sizes: " + " ".join(str(s) for s in header.sizes),
        "space directions: " + " ".join(
            f"({_fmt(d[i, 0])},{_fmt(d[i, 1])},{_fmt(d[i, 2])})" for i in range(3)),
        "space origin: (" + ",".join(_fmt(c) for c in header.space_origin) + ")",
        f"endian: {header.endianness}",
        f"encoding: {header.encoding}",
    ]
    lines.extend(f"{k}:={v}" for k, v in header.custom_fields.items())
    lines.append("")  # blank terminator
    return ("\n".join(lines) + "\n").encode("ascii")


def _decode_payload(header: NrrdHeader, payload: bytes) -> np.ndarray:
    count = header.sizes[0] * header.sizes[1] * header.sizes[2]
    dtype = header.dtype
    if header.encoding == "gzip":
        try:
            payload = gzip.decompress(payload)
        except OSError as exc:
            raise VolumeFormatError(f"bad gzip payload: {exc}") from exc
    if header.encoding == "ascii":
        tokens = payload.split()
        if len(tokens) != count:
            raise VolumeFormatError(
                f"payload length mismatch: expected {count} ascii samples, got {len(tokens)}")
        if header.sample_type == "float":
            flat = np.array([float(t) for t in tokens], dtype=np.float32)
        else:
            flat = np.array([int(t) for t in tokens]).astype(_TYPE_DTYPES[header.sample_type])
    else:
        expected = count * dtype.itemsize
        if len(payload) != expected:
            raise VolumeFormatError(
                f"payload length mismatch: expected {expected} bytes, got {len(payload)}")
        flat = np.frombuffer(payload, dtype=dtype)
    arr = flat.reshape(header.sizes, order="F")
    if arr.dtype.byteorder == ">":
        arr = arr.astype(arr.dtype.newbyteorder("<"))
    return np.ascontiguousarray(arr)


def _segments_from_custom(custom: dict[str, str]) -> SegmentTable:
    entries = []
    n = 0
    while f"Segment{n}_LabelValue" in custom:
        name = custom.get(f"Segment{n}_Name", f"segment_{n}")
        value = int(custom[f"Segment{n}_LabelValue"])
        color = None
        if f"Segment{n}_Color" in custom:
            parts = custom[f"Segment{n}_Color"].split()
            if len(parts) == 3:
                color = tuple(float(p) for p in parts)
        entries.append(Segment(name=name, label_value=value, color=color))
        n += 1
    return SegmentTable(entries)


def _segment_custom_fields(segments: SegmentTable) -> dict[str, str]:
    custom: dict[str, str] = {}
    for n, seg in enumerate(segments.entries):
        custom[f"Segment{n}_Name"] = seg.name
        custom[f"Segment{n}_LabelValue"] = str(int(seg.label_value))
        if seg.color is not None:
            custom[f"Segment{n}_Color"] = " ".join(_fmt(c) for c in seg.color)
    return custom


def load_label_volume(path, *, enable_gzip: bool = True) -> tuple[LabelVolume, SegmentTable]:
    """Read a label volume and its Slicer-style segment table from an NRRD file.

    Float sample data is rejected: labels are IDs, not intensities.
    """
    with open(path, "rb") as f:
        data = f.read()
    header, offset = _parse_header_and_offset(data, enable_gzip=enable_gzip)
    if header.sample_type == "float":
        raise VolumeFormatError("float samples cannot be interpreted as labels")
    arr = _decode_payload(header, data[offset:])
    volume = LabelVolume(dims=header.sizes, spacing=header.spacing,
                         origin=header.space_origin, labels=arr)
    return volume, _segments_from_custom(header.custom_fields)


def write_nrrd(volume: LabelVolume, segments: SegmentTable | None, path) -> None:
    """Write a volume as NRRD0004, raw little-endian, with SegmentN_* fields.

    ``load_label_volume(write_nrrd(...))`` round-trips dims, geometry, labels
    (bit-exact payload) and the segment table.
    """
    if volume.labels.dtype not in _DTYPE_TYPES:
        raise VolumeFormatError(f"unsupported label dtype {volume.labels.dtype}")
    segments = segments if segments is not None else SegmentTable()
    header = NrrdHeader(
        version=4, dimension=3, sizes=volume.dims,
        sample_type=_DTYPE_TYPES[volume.labels.dtype],
        encoding="raw", endianness="little",
        space_directions=np.diag(volume.spacing), space_origin=volume.origin,
        custom_fields=_segment_custom_fields(segments),
    )
    payload = np.ascontiguousarray(
        volume.labels.astype(volume.labels.dtype.newbyteorder("<"), copy=False)
    ).ravel(order="F").tobytes()
    with open(path, "wb") as f:
        f.write(emit_nrrd_header(header))
        f.write(payload)


def encode_payload(header: NrrdHeader, flat_le: np.ndarray) -> bytes:
    """Encode an x-fastest flat sample array per the header's encoding."""
    if header.encoding == "ascii":
        if header.sample_type == "float":
            return (" ".join(repr(float(v)) for v in flat_le) + "\n").encode("ascii")
        return (" ".join(str(int(v)) for v in flat_le) + "\n").encode("ascii")
    raw = np.asarray(flat_le).astype(header.dtype, copy=False).tobytes()
    if header.encoding == "gzip":
        return gzip.compress(raw, compresslevel=6, mtime=0)
    return raw


def write_nrrd_bytes(header: NrrdHeader, flat_samples: np.ndarray) -> bytes:
    """Assemble a complete NRRD file for an arbitrary supported header."""
    return emit_nrrd_header(header) + encode_payload(header, flat_samples)


def read_nrrd_bytes(data: bytes, *, enable_gzip: bool = True) -> tuple[NrrdHeader, np.ndarray]:
    """Parse a complete NRRD file into (header, 3-D sample array)."""
    header, offset = _parse_header_and_offset(data, enable_gzip=enable_gzip)
    return header, _decode_payload(header, data[offset:])
