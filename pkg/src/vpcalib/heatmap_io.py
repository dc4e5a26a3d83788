"""File formats for per-vehicle heatmap observations.

Binary layout (little-endian), one observation per file:

    magic   4 bytes  b"DVP1"
    u32     grid resolution R
    u32     scale count S
    f64*S   the scales, ascending
    u32     channel count (2: first and second vanishing point)
    f32     channel-major, scale-major, row-major R*R grids

A JSON alternative with the same structure is accepted and produced for
paths ending in ``.json``.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import InputFormatError
from .heatmap import Heatmap, check_scales

__all__ = ["write_heatmap_file", "read_heatmap_file"]

MAGIC = b"DVP1"


def _validate_channels(channel_maps) -> tuple[int, tuple[float, ...]]:
    if not channel_maps or not channel_maps[0]:
        raise ValueError("channel_maps must contain at least one channel and scale")
    scales = tuple(h.scale for h in channel_maps[0])
    resolution = channel_maps[0][0].resolution
    for channel in channel_maps:
        if tuple(h.scale for h in channel) != scales:
            raise ValueError("all channels must carry the same scale set")
        if any(h.resolution != resolution for h in channel):
            raise ValueError("all heatmaps must share one resolution")
    check_scales(scales)
    return resolution, scales


def write_heatmap_file(path, channel_maps) -> None:
    """Write channel-major heatmaps (``channel_maps[channel][scale]``)."""
    path = Path(path)
    resolution, scales = _validate_channels(channel_maps)
    if path.suffix == ".json":
        payload = {
            "magic": MAGIC.decode(),
            "resolution": resolution,
            "scales": list(scales),
            "channels": len(channel_maps),
            "data": [
                [np.asarray(h.values, dtype=np.float32).tolist() for h in channel]
                for channel in channel_maps
            ],
        }
        path.write_text(json.dumps(payload))
        return
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", resolution, len(scales)))
        fh.write(struct.pack(f"<{len(scales)}d", *scales))
        fh.write(struct.pack("<I", len(channel_maps)))
        for channel in channel_maps:
            for h in channel:
                fh.write(np.ascontiguousarray(h.values, dtype="<f4").tobytes())


def read_heatmap_file(path) -> list[list[Heatmap]]:
    """Read a heatmap observation; returns ``[channel][scale]`` heatmaps."""
    path = Path(path)
    if path.suffix == ".json":
        return _read_json(path)
    return _read_binary(path)


def _read_json(path: Path) -> list[list[Heatmap]]:
    try:
        payload = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot parse heatmap file {path}: {exc}") from exc
    if payload.get("magic") != MAGIC.decode():
        raise InputFormatError(f"{path}: bad magic {payload.get('magic')!r}")
    try:
        resolution = int(payload["resolution"])
        scales = [float(s) for s in payload["scales"]]
        data = payload["data"]
        out = []
        for channel in data:
            maps = []
            for scale, grid in zip(scales, channel, strict=True):
                arr = np.asarray(grid, dtype=float)
                if arr.shape != (resolution, resolution):
                    raise InputFormatError(
                        f"{path}: grid shape {arr.shape} != ({resolution}, {resolution})"
                    )
                maps.append(Heatmap(arr, scale))
            out.append(maps)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{path}: malformed heatmap JSON: {exc}") from exc
    if len(out) != int(payload.get("channels", len(out))):
        raise InputFormatError(f"{path}: channel count mismatch")
    return out


def _read_binary(path: Path) -> list[list[Heatmap]]:
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise InputFormatError(f"{path}: bad magic {blob[:4]!r}")
    try:
        offset = 4
        resolution, n_scales = struct.unpack_from("<II", blob, offset)
        offset += 8
        scales = struct.unpack_from(f"<{n_scales}d", blob, offset)
        offset += 8 * n_scales
        (n_channels,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        grid_bytes = resolution * resolution * 4
        expected = offset + n_channels * n_scales * grid_bytes
        if len(blob) != expected:
            raise InputFormatError(
                f"{path}: expected {expected} bytes, found {len(blob)}"
            )
        out = []
        for _ in range(n_channels):
            maps = []
            for scale in scales:
                grid = np.frombuffer(blob, dtype="<f4", count=resolution * resolution, offset=offset)
                offset += grid_bytes
                maps.append(Heatmap(grid.reshape(resolution, resolution).astype(float), scale))
            out.append(maps)
    except struct.error as exc:
        raise InputFormatError(f"{path}: truncated heatmap file: {exc}") from exc
    return out
