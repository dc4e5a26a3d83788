"""Multi-scale diamond-space heatmap codec for vanishing points.

A vanishing point is expressed in the coordinate system tied to a vehicle's
bounding box (box centre at the origin, corners at (+-1, +-1)), shrunk by one
of several scales, mapped into the diamond, rotated 45 degrees so the diamond
fills the full square grid, and rasterized as a Gaussian peak. Decoding runs
the chain backwards from the grid argmax and picks, among the per-scale
decodes, the one with the smallest spread of near-maximum cells.

Grid convention: ``values[row, col]`` with the rotated coordinates
``u = X + Y`` (column axis) and ``v = Y - X`` (row axis), each spanning
[-1, 1] across pixel centres ``0 .. resolution - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import projective as pj
from .errors import (
    AllScalesDegenerate,
    DegeneratePeak,
    EmptyHeatmap,
    OutOfDiamond,
)

__all__ = [
    "DEFAULT_SCALES",
    "BBox",
    "Heatmap",
    "VPDetection",
    "HeatmapCodec",
    "bbox_normalize",
    "bbox_denormalize",
    "bbox_normalize_direction",
    "bbox_denormalize_direction",
    "diamond_to_pixel",
    "pixel_to_diamond",
    "encode_vp",
    "decode_heatmap",
    "vp_of_pixel",
    "accuracy_measure",
    "quantization_radius",
    "select_vp",
    "check_scales",
]

DEFAULT_SCALES: tuple[float, ...] = (0.03, 0.1, 0.3, 1.0)
DEFAULT_RESOLUTION = 64
DEFAULT_SIGMA = 1.0
DEFAULT_PEAK_RATIO = 0.8

# Relative |w| below which a decoded homogeneous point counts as a direction.
IDEAL_EPS = 1e-9
# Norm below which a decoded peak sits on the bounding-box centre.
CENTER_EPS = 1e-9


def check_scales(scales) -> tuple[float, ...]:
    """Validate a scale set: strictly increasing positive reals."""
    out = tuple(float(s) for s in scales)
    if not out:
        raise ValueError("scale set must not be empty")
    if any(not np.isfinite(s) or s <= 0 for s in out):
        raise ValueError(f"scales must be positive and finite, got {out}")
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"scales must be strictly increasing, got {out}")
    return out


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in frame pixels."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"invalid box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def center(self) -> np.ndarray:
        return np.array([(self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0])

    @property
    def half_size(self) -> np.ndarray:
        return np.array([(self.x_max - self.x_min) / 2.0, (self.y_max - self.y_min) / 2.0])

    def iou(self, other: "BBox") -> float:
        ix = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        iy = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if ix <= 0 or iy <= 0:
            return 0.0
        inter = ix * iy
        area = (self.x_max - self.x_min) * (self.y_max - self.y_min)
        area_o = (other.x_max - other.x_min) * (other.y_max - other.y_min)
        return inter / (area + area_o - inter)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass
class Heatmap:
    """One square response grid over the rotated diamond at a single scale."""

    values: np.ndarray
    scale: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"heatmap must be square, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("heatmap values must be finite")
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"heatmap scale must be positive, got {self.scale}")

    @property
    def resolution(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class VPDetection:
    """A decoded vanishing point in frame coordinates.

    ``point`` is a frame-pixel position, or a unit direction from the box
    centre when ``direction_only`` is set (the vanishing point lies at
    infinity: usable for horizon slope, not for focal-length estimation).
    ``uncertainty`` is the spread measure of the chosen scale.
    """

    point: np.ndarray
    uncertainty: float
    chosen_scale: float
    direction_only: bool = False


# ---------------------------------------------------------------------------
# bounding-box coordinate system


def bbox_normalize(points, box: BBox) -> np.ndarray:
    """Frame pixels -> box coordinates (centre at origin, corners at (+-1, +-1))."""
    pts = np.asarray(points, dtype=float)
    return (pts - box.center) / box.half_size


def bbox_denormalize(points, box: BBox) -> np.ndarray:
    """Inverse of :func:`bbox_normalize`."""
    pts = np.asarray(points, dtype=float)
    return pts * box.half_size + box.center


def bbox_normalize_direction(direction, box: BBox) -> np.ndarray:
    """Linear part of :func:`bbox_normalize`, for points at infinity."""
    return np.asarray(direction, dtype=float) / box.half_size


def bbox_denormalize_direction(direction, box: BBox) -> np.ndarray:
    return np.asarray(direction, dtype=float) * box.half_size


# ---------------------------------------------------------------------------
# diamond <-> grid


def diamond_to_pixel(xy, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Diamond Cartesian (X, Y) -> fractional (row, col) on the rotated grid.

    Rotating by 45 degrees maps the diamond onto the full square, so every
    grid cell represents actual projective plane: ``u = X + Y``,
    ``v = Y - X``, then [-1, 1] is spread across the pixel centres.
    """
    xy = np.asarray(xy, dtype=float)
    absum = np.abs(xy[..., 0]) + np.abs(xy[..., 1])
    if np.any(absum > 1.0 + 1e-9):
        raise OutOfDiamond(f"|X| + |Y| = {float(np.max(absum))} exceeds 1")
    u = xy[..., 0] + xy[..., 1]
    v = xy[..., 1] - xy[..., 0]
    col = (u + 1.0) / 2.0 * (resolution - 1)
    row = (v + 1.0) / 2.0 * (resolution - 1)
    return np.stack([row, col], axis=-1)


def pixel_to_diamond(rowcol, resolution: int = DEFAULT_RESOLUTION) -> np.ndarray:
    """Fractional (row, col) -> diamond Cartesian (X, Y). Exact inverse on its range."""
    rc = np.asarray(rowcol, dtype=float)
    u = 2.0 * rc[..., 1] / (resolution - 1) - 1.0
    v = 2.0 * rc[..., 0] / (resolution - 1) - 1.0
    return np.stack([(u - v) / 2.0, (u + v) / 2.0], axis=-1)


def _clamp_to_diamond(xy: np.ndarray) -> np.ndarray:
    """Radially shrink points with |X| + |Y| > 1 onto the diamond boundary."""
    absum = np.abs(xy[..., 0]) + np.abs(xy[..., 1])
    factor = np.where(absum > 1.0, 1.0 / np.maximum(absum, 1e-300), 1.0)
    return xy * factor[..., None]


def _as_vp_homogeneous(vp) -> np.ndarray:
    vp = np.asarray(vp, dtype=float)
    if vp.shape == (2,):
        return np.array([vp[0], vp[1], 1.0])
    if vp.shape == (3,):
        return vp
    raise ValueError(f"vanishing point must be (2,) or homogeneous (3,), got {vp.shape}")


def _round_half_up(x) -> np.ndarray:
    # ties go toward +inf so encode/decode share one deterministic grid
    return np.floor(np.asarray(x) + 0.5).astype(int)


# ---------------------------------------------------------------------------
# encode / decode


def encode_vp(
    vp,
    scale: float,
    resolution: int = DEFAULT_RESOLUTION,
    sigma: float = DEFAULT_SIGMA,
) -> Heatmap:
    """Rasterize one vanishing point as a Gaussian peak on the diamond grid.

    ``vp`` is in box coordinates, either a finite (x, y) or a homogeneous
    triple (points at infinity allowed). The peak has value exactly 1 at the
    grid cell nearest the mapped position; the Gaussian is truncated at three
    standard deviations and values below 1e-4 are zeroed, which keeps targets
    sparse without moving the argmax.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    vph = _as_vp_homogeneous(vp)
    norm = np.max(np.abs(vph))
    d = pj.to_diamond(pj.scale_point(vph / norm, scale))
    xy = pj.dehomogenize(d)
    rc = diamond_to_pixel(xy, resolution)
    i0, j0 = _round_half_up(rc[0]), _round_half_up(rc[1])

    values = np.zeros((resolution, resolution))
    reach = int(np.ceil(3.0 * sigma))
    lo_i, hi_i = max(0, i0 - reach), min(resolution, i0 + reach + 1)
    lo_j, hi_j = max(0, j0 - reach), min(resolution, j0 + reach + 1)
    ii = np.arange(lo_i, hi_i)
    jj = np.arange(lo_j, hi_j)
    di2 = (ii - i0) ** 2
    dj2 = (jj - j0) ** 2
    patch = np.exp(-(di2[:, None] + dj2[None, :]) / (2.0 * sigma * sigma))
    patch[patch < 1e-4] = 0.0
    values[lo_i:hi_i, lo_j:hi_j] = patch
    return Heatmap(values, scale)


def decode_heatmap(
    heatmap: Heatmap, peak_ratio: float = DEFAULT_PEAK_RATIO
) -> tuple[tuple[int, int], np.ndarray]:
    """Grid argmax plus the set of near-maximum cells.

    Negative responses (possible in raw detector output) are zeroed first.
    Returns ``((i, j), candidates)`` where ``candidates`` is an (n, 2) int
    array in row-major order containing every cell with value at least
    ``peak_ratio`` times the maximum; the argmax tie-break is the first cell
    in row-major order and is always a member of ``candidates``.
    """
    if not (0.0 < peak_ratio <= 1.0):
        raise ValueError(f"peak_ratio must be in (0, 1], got {peak_ratio}")
    values = np.maximum(heatmap.values, 0.0)
    top = values.max()
    if top <= 0.0:
        raise EmptyHeatmap("all heatmap values are zero")
    flat = int(np.argmax(values))
    peak = (flat // heatmap.resolution, flat % heatmap.resolution)
    candidates = np.argwhere(values >= peak_ratio * top)
    return peak, candidates


def vp_of_pixel(
    row,
    col,
    scale: float,
    resolution: int = DEFAULT_RESOLUTION,
) -> np.ndarray:
    """Homogeneous box-coordinate vanishing point of a (possibly fractional) grid cell.

    The returned triple may have ``w ~ 0`` for cells on the diamond boundary:
    those decode to directions rather than finite points.
    """
    rc = np.stack([np.asarray(row, dtype=float), np.asarray(col, dtype=float)], axis=-1)
    xy = _clamp_to_diamond(pixel_to_diamond(rc, resolution))
    o = pj.from_diamond(np.concatenate([xy, np.ones(xy.shape[:-1] + (1,))], axis=-1))
    return pj.scale_point(o, 1.0 / scale)


def _directions(vph: np.ndarray) -> np.ndarray:
    """Unit direction from the box centre for finite or infinite homogeneous points."""
    vph = np.atleast_2d(vph)
    ideal = pj.is_ideal(vph, IDEAL_EPS)
    xy = np.where(ideal[:, None], vph[:, :2], vph[:, :2] / np.where(ideal, 1.0, vph[:, 2])[:, None])
    norms = np.linalg.norm(xy, axis=1)
    return xy / np.maximum(norms, 1e-300)[:, None]


def accuracy_measure(heatmap: Heatmap, peak: tuple[int, int], candidates: np.ndarray) -> float:
    """Mean relative spread of the near-maximum cells around the peak.

    Each candidate cell decodes to a vanishing point in box coordinates; the
    measure is the mean of ``|v - v_peak| / |v_peak|``. Cells decoding to
    points at infinity are skipped (their spread is unbounded). When the peak
    itself decodes to a direction, the spread is computed on unit direction
    vectors instead, so a detection at infinity still gets a finite, zero-
    when-unanimous uncertainty.
    """
    cand = np.asarray(candidates, dtype=float)
    if cand.ndim != 2 or cand.shape[0] == 0:
        raise ValueError("candidates must be a nonempty (n, 2) array")
    vph = vp_of_pixel(cand[:, 0], cand[:, 1], heatmap.scale, heatmap.resolution)
    peak_vph = vp_of_pixel(float(peak[0]), float(peak[1]), heatmap.scale, heatmap.resolution)

    if pj.is_ideal(peak_vph, IDEAL_EPS):
        dirs = _directions(vph)
        peak_dir = _directions(peak_vph)[0]
        return float(np.mean(np.linalg.norm(dirs - peak_dir, axis=1)))

    peak_xy = pj.dehomogenize(peak_vph)
    peak_norm = float(np.linalg.norm(peak_xy))
    if peak_norm < CENTER_EPS:
        raise DegeneratePeak("peak decodes to the bounding-box centre")
    finite = ~pj.is_ideal(vph, IDEAL_EPS)
    xy = pj.dehomogenize(vph[finite])
    return float(np.mean(np.linalg.norm(xy - peak_xy, axis=1)) / peak_norm)


def quantization_radius(
    row: int,
    col: int,
    scale: float,
    resolution: int = DEFAULT_RESOLUTION,
    edge_samples: int = 9,
) -> float:
    """One-pixel quantization bound at a grid cell, in radians.

    Largest angle between the vanishing-point direction decoded at the cell
    centre and those decoded on the boundary of the half-pixel cell: any true
    position that rounds to this cell lies within this angle of the decoded
    point. Infinite when the cell touches a degenerate decode, which makes
    such cells sort last during scale selection.
    """
    ts = np.linspace(-0.5, 0.5, edge_samples)
    half = np.full_like(ts, 0.5)
    rows = np.concatenate([row - half, row + half, row + ts, row + ts])
    cols = np.concatenate([col + ts, col + ts, col - half, col + half])
    center = vp_of_pixel(float(row), float(col), scale, resolution)
    c_dir = _directions(center)[0]
    if not np.isfinite(c_dir).all():
        return np.inf
    boundary = vp_of_pixel(rows, cols, scale, resolution)
    xy = boundary[:, :2].copy()
    finite = ~pj.is_ideal(boundary, IDEAL_EPS)
    xy[finite] /= boundary[finite, 2][:, None]
    norms = np.linalg.norm(xy, axis=1)
    if np.any(norms < 1e-300):
        return np.inf
    cosines = np.clip((xy / norms[:, None]) @ c_dir, -1.0, 1.0)
    return float(np.max(np.arccos(cosines)))


def select_vp(
    heatmaps,
    box: BBox,
    peak_ratio: float = DEFAULT_PEAK_RATIO,
) -> VPDetection:
    """Decode one heatmap per scale and keep the scale with the smallest spread.

    Ties on the spread measure (ubiquitous with single-cell peaks) are broken
    by the smallest one-pixel quantization bound, i.e. the scale whose grid
    represents this particular vanishing point most precisely, then by scale
    order. Scales whose heatmap is empty or whose peak decodes to the box
    centre are skipped; if every scale is skipped the observation is useless.
    """
    candidates = []
    for index, heatmap in enumerate(heatmaps):
        try:
            peak, near_max = decode_heatmap(heatmap, peak_ratio)
        except EmptyHeatmap:
            continue
        vph = vp_of_pixel(float(peak[0]), float(peak[1]), heatmap.scale, heatmap.resolution)
        ideal = bool(pj.is_ideal(vph, IDEAL_EPS))
        if not ideal and np.linalg.norm(pj.dehomogenize(vph)) < CENTER_EPS:
            continue
        try:
            spread = accuracy_measure(heatmap, peak, near_max)
        except DegeneratePeak:
            continue
        radius = quantization_radius(
            peak[0], peak[1], heatmap.scale, heatmap.resolution
        )
        candidates.append((spread, radius, index, heatmap.scale, vph, ideal))

    if not candidates:
        raise AllScalesDegenerate("no heatmap scale produced a usable vanishing point")

    spread, _, _, scale, vph, ideal = min(candidates, key=lambda c: c[:3])
    if ideal:
        direction = bbox_denormalize_direction(vph[:2], box)
        direction = direction / np.linalg.norm(direction)
        return VPDetection(direction, spread, scale, direction_only=True)
    point = bbox_denormalize(pj.dehomogenize(vph), box)
    return VPDetection(point, spread, scale, direction_only=False)


class HeatmapCodec:
    """Encode/decode vanishing points against a fixed scale set and grid.

    Channel convention for per-vehicle observations: channel 0 is the
    vanishing point of the direction the vehicle faces, channel 1 the
    orthogonal one.
    """

    def __init__(
        self,
        resolution: int = DEFAULT_RESOLUTION,
        scales=DEFAULT_SCALES,
        sigma: float = DEFAULT_SIGMA,
        peak_ratio: float = DEFAULT_PEAK_RATIO,
    ):
        if resolution < 2:
            raise ValueError(f"resolution must be at least 2, got {resolution}")
        self.resolution = int(resolution)
        self.scales = check_scales(scales)
        self.sigma = float(sigma)
        self.peak_ratio = float(peak_ratio)

    def encode(self, vp) -> list[Heatmap]:
        """One heatmap per scale for a box-coordinate vanishing point."""
        return [encode_vp(vp, s, self.resolution, self.sigma) for s in self.scales]

    def decode(self, heatmaps, box: BBox) -> VPDetection:
        return select_vp(heatmaps, box, self.peak_ratio)

    def encode_pair(self, first_vp, second_vp) -> list[list[Heatmap]]:
        """Channel-major heatmaps for a (first, second) vanishing-point pair."""
        return [self.encode(first_vp), self.encode(second_vp)]

    def decode_pair(self, channel_maps, box: BBox) -> tuple[VPDetection, VPDetection]:
        first, second = channel_maps
        return self.decode(first, box), self.decode(second, box)
