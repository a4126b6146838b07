"""Geo-referenced rasters: affine transform, the .grid binary format, windowed reads.

A .grid file is flat little-endian band-sequential row-major samples; the
sidecar <name>.grid.json carries width/height/bands/sample_type/nodata/
transform/crs_tag. Rasters are north-up with square pixels; world x grows
with column, world y shrinks with row.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

DTYPES = {"u8": np.dtype("<u1"), "u16": np.dtype("<u2"), "f32": np.dtype("<f4"),
          "u32": np.dtype("<u4")}  # u32 only for component-label rasters


class GridError(IOError):
    """Unreadable raster source or header/data mismatch."""


@dataclass(frozen=True)
class GeoTransform:
    origin_x: float  # world x of the upper-left corner of pixel (0, 0), meters
    origin_y: float
    pixel_size: float  # meters per pixel, square pixels

    def __post_init__(self):
        if self.pixel_size <= 0:
            raise ValueError("pixel_size must be positive")

    def pixel_to_world(self, row, col):
        return (self.origin_x + col * self.pixel_size,
                self.origin_y - row * self.pixel_size)

    def world_to_pixel(self, x, y):
        return ((self.origin_y - y) / self.pixel_size,
                (x - self.origin_x) / self.pixel_size)

    def pixel_center(self, row, col):
        return self.pixel_to_world(row + 0.5, col + 0.5)

    def to_dict(self) -> dict:
        return {"origin_x": self.origin_x, "origin_y": self.origin_y,
                "pixel_size": self.pixel_size}

    @classmethod
    def from_dict(cls, d: dict) -> "GeoTransform":
        return cls(d["origin_x"], d["origin_y"], d["pixel_size"])


def pixel_world_transform(transform: GeoTransform, point, direction: str):
    """Map (row, col) -> (x, y) when direction is "forward", the inverse otherwise."""
    a, b = point
    if direction == "forward":
        return transform.pixel_to_world(a, b)
    if direction == "inverse":
        return transform.world_to_pixel(a, b)
    raise ValueError(f"unknown direction {direction!r}")


class GeoRaster:
    """In-memory raster; data has shape (bands, height, width)."""

    def __init__(self, data: np.ndarray, transform: GeoTransform,
                 sample_type: str | None = None, nodata=None, crs_tag: str = "local"):
        if data.ndim == 2:
            data = data[None, :, :]
        if sample_type is None:
            sample_type = {np.dtype("u1"): "u8", np.dtype("u2"): "u16",
                           np.dtype("f4"): "f32",
                           np.dtype("u4"): "u32"}[data.dtype.newbyteorder("=")]
        if sample_type not in DTYPES:
            raise ValueError(f"unsupported sample_type {sample_type!r}")
        self.data = np.ascontiguousarray(data.astype(DTYPES[sample_type], copy=False))
        self.bands, self.height, self.width = self.data.shape
        self.sample_type = sample_type
        self.nodata = nodata
        self.transform = transform
        self.crs_tag = crs_tag

    def read_window(self, row0: int, col0: int, nrows: int, ncols: int,
                    band: int = 0) -> np.ndarray:
        return _window(self.data[band], self.width, self.height,
                       row0, col0, nrows, ncols, self.nodata)

    def band(self, i: int = 0) -> np.ndarray:
        return self.data[i]


class GridSource:
    """File-backed raster with bounded-memory window reads.

    Windows are copied out of a read-only memmap, so concurrent reads over
    disjoint windows are safe.
    """

    def __init__(self, path: str):
        self.path = path
        header_path = path + ".json"
        try:
            with open(header_path) as fh:
                header = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise GridError(f"cannot read grid header {header_path}: {exc}") from exc
        self.width = int(header["width"])
        self.height = int(header["height"])
        self.bands = int(header["bands"])
        self.sample_type = header["sample_type"]
        self.nodata = header.get("nodata")
        self.transform = GeoTransform.from_dict(header["transform"])
        self.crs_tag = header.get("crs_tag", "local")
        if self.sample_type not in DTYPES:
            raise GridError(f"unsupported sample_type {self.sample_type!r} in {header_path}")
        dtype = DTYPES[self.sample_type]
        expected = self.width * self.height * self.bands * dtype.itemsize
        actual = os.path.getsize(path)
        if actual != expected:
            raise GridError(f"{path}: {actual} bytes on disk, header implies {expected}")
        self._mm = np.memmap(path, dtype=dtype, mode="r",
                             shape=(self.bands, self.height, self.width))

    def read_window(self, row0: int, col0: int, nrows: int, ncols: int,
                    band: int = 0) -> np.ndarray:
        return _window(self._mm[band], self.width, self.height,
                       row0, col0, nrows, ncols, self.nodata)

    def read_all(self) -> GeoRaster:
        return GeoRaster(np.array(self._mm), self.transform,
                         self.sample_type, self.nodata, self.crs_tag)


def _window(plane, width, height, row0, col0, nrows, ncols, nodata):
    r1, c1 = row0 + nrows, col0 + ncols
    if r1 <= 0 or c1 <= 0 or row0 >= height or col0 >= width:
        raise ValueError("window does not intersect the grid")
    ir0, ir1 = max(row0, 0), min(r1, height)
    ic0, ic1 = max(col0, 0), min(c1, width)
    block = np.array(plane[ir0:ir1, ic0:ic1])
    if (ir0, ir1, ic0, ic1) == (row0, r1, col0, c1):
        return block
    fill = 0 if nodata is None else nodata
    out = np.full((nrows, ncols), fill, dtype=block.dtype)
    out[ir0 - row0:ir1 - row0, ic0 - col0:ic1 - col0] = block
    return out


def _write_header(path: str, width, height, bands, sample_type, nodata,
                  transform: GeoTransform, crs_tag: str) -> None:
    header = {"width": width, "height": height, "bands": bands,
              "sample_type": sample_type, "nodata": nodata,
              "transform": transform.to_dict(), "crs_tag": crs_tag}
    with open(path + ".json", "w") as fh:
        json.dump(header, fh, indent=2)
        fh.write("\n")


def write_grid(raster: GeoRaster, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(raster.data.tobytes())
    _write_header(path, raster.width, raster.height, raster.bands,
                  raster.sample_type, raster.nodata, raster.transform, raster.crs_tag)


def read_grid(path: str) -> GeoRaster:
    return GridSource(path).read_all()


class GridWriter:
    """Streams a .grid to disk strip by strip without holding the full raster."""

    def __init__(self, path: str, width: int, height: int, bands: int,
                 sample_type: str, transform: GeoTransform,
                 nodata=None, crs_tag: str = "local"):
        self.path = path
        self.width, self.height, self.bands = width, height, bands
        self.sample_type = sample_type
        self._mm = np.memmap(path, dtype=DTYPES[sample_type], mode="w+",
                             shape=(bands, height, width))
        _write_header(path, width, height, bands, sample_type, nodata,
                      transform, crs_tag)

    def write_rows(self, row0: int, block: np.ndarray, band: int = 0) -> None:
        if block.ndim == 3:
            self._mm[:, row0:row0 + block.shape[1], :] = block
        else:
            self._mm[band, row0:row0 + block.shape[0], :] = block

    def close(self) -> None:
        self._mm.flush()
        del self._mm


def import_pnm(path: str, transform: GeoTransform, nodata=None,
               crs_tag: str = "local") -> GeoRaster:
    """Import binary PPM (P6) or PGM (P5) as a GeoRaster."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] not in (b"P5", b"P6"):
        raise GridError(f"{path}: not a binary PGM/PPM file")
    bands = 3 if raw[:2] == b"P6" else 1
    fields, pos = [], 2
    while len(fields) < 3:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(raw[start:pos]))
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval > 65535:
        raise GridError(f"{path}: maxval {maxval} out of range")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    count = width * height * bands
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=pos)
    if data.size != count:
        raise GridError(f"{path}: truncated pixel data")
    # PNM interleaves bands per pixel; .grid is band-sequential
    data = data.reshape(height, width, bands).transpose(2, 0, 1)
    sample_type = "u16" if maxval > 255 else "u8"
    return GeoRaster(data.astype(DTYPES[sample_type]), transform,
                     sample_type, nodata, crs_tag)
