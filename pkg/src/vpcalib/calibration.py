"""Camera calibration from orthogonal vehicle vanishing-point pairs.

Each observed vehicle contributes a pair of vanishing points: the direction
it faces and the orthogonal direction along its axles, both parallel to the
road plane. Every pair constrains the focal length through the orthogonality
relation ``f = sqrt(-(u - p) . (v - p))``; all the points together lie on the
horizon line, whose preimage under the intrinsic matrix is the road-plane
normal. Aggregation is median-based throughout, so up to half the pairs can
be arbitrarily wrong without moving the result outside the range of the good
ones.

``VanishingPointCalibrator`` wraps the procedure in a scikit-learn style
``fit``/``transform`` estimator so it can sit in standard pipelines;
``transform`` maps frame-pixel points onto the reconstructed road plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array, as_points_2d, check_fitted, check_image_size
from .errors import (
    DegenerateInput,
    DegenerateNormal,
    ImaginaryFocal,
    InsufficientPairs,
    NearVerticalHorizon,
    NearZeroFocal,
    PointOnHorizon,
)

__all__ = [
    "VPPair",
    "CameraIntrinsics",
    "CameraCalibration",
    "focal_from_pair",
    "estimate_focal",
    "estimate_horizon",
    "plane_normal_from_horizon",
    "project_to_plane",
    "calibrate",
    "VanishingPointCalibrator",
]

DEFAULT_MIN_PAIRS = 5
DEFAULT_FOCAL_EPSILON = 1.0  # px; focal lengths below this are noise
DEFAULT_SLOPE_EPSILON = 1e-6  # px; guard against vertical pair lines


@dataclass(frozen=True)
class VPPair:
    """One vehicle's vanishing points in frame pixels.

    A member flagged ``*_is_direction`` holds a direction vector instead of a
    position: its vanishing point lies at infinity. Such members still carry
    horizon-slope information but cannot enter the focal-length relation.
    """

    first: np.ndarray
    second: np.ndarray
    weight: float = 1.0
    first_is_direction: bool = False
    second_is_direction: bool = False

    def __post_init__(self):
        object.__setattr__(self, "first", as_float_array(self.first, "first", (2,)))
        object.__setattr__(self, "second", as_float_array(self.second, "second", (2,)))
        if self.weight < 0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")
        if (
            not self.first_is_direction
            and not self.second_is_direction
            and np.allclose(self.first, self.second)
        ):
            raise ValueError("vanishing points of a pair must be distinct")

    @property
    def finite(self) -> bool:
        return not (self.first_is_direction or self.second_is_direction)


@dataclass(frozen=True)
class CameraIntrinsics:
    f: float
    principal_point: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.f) and self.f > 0):
            raise ValueError(f"focal length must be positive, got {self.f}")
        object.__setattr__(
            self, "principal_point", as_float_array(self.principal_point, "principal_point", (2,))
        )


@dataclass(frozen=True)
class CameraCalibration:
    """Recovered scene geometry: intrinsics, horizon and road-plane normal.

    ``delta`` scales the road plane; it cannot be recovered from vanishing
    points alone, so it defaults to 1 and all plane distances are relative.
    """

    intrinsics: CameraIntrinsics
    horizon: np.ndarray
    plane_normal: np.ndarray
    delta: float = 1.0
    n_pairs_used: int = 0
    n_pairs_rejected: int = 0

    def __post_init__(self):
        object.__setattr__(self, "horizon", as_float_array(self.horizon, "horizon", (3,)))
        object.__setattr__(
            self, "plane_normal", as_float_array(self.plane_normal, "plane_normal", (3,))
        )
        if np.linalg.norm(self.plane_normal) < 1e-12:
            raise DegenerateNormal("plane normal is (near-)zero")
        if np.hypot(self.horizon[0], self.horizon[1]) == 0.0:
            raise ValueError("horizon must not be the line at infinity")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be positive, got {self.delta}")

    @property
    def unit_normal(self) -> np.ndarray:
        """Unit plane normal with positive z component."""
        n = self.plane_normal / np.linalg.norm(self.plane_normal)
        return -n if n[2] < 0 else n

    def to_dict(self) -> dict:
        return {
            "f": self.intrinsics.f,
            "principal_point": self.intrinsics.principal_point.tolist(),
            "horizon": self.horizon.tolist(),
            "normal": self.plane_normal.tolist(),
            "delta": self.delta,
            "n_pairs_used": self.n_pairs_used,
            "n_pairs_rejected": self.n_pairs_rejected,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CameraCalibration":
        return cls(
            intrinsics=CameraIntrinsics(float(data["f"]), data["principal_point"]),
            horizon=data["horizon"],
            plane_normal=data["normal"],
            delta=float(data.get("delta", 1.0)),
            n_pairs_used=int(data.get("n_pairs_used", 0)),
            n_pairs_rejected=int(data.get("n_pairs_rejected", 0)),
        )


# ---------------------------------------------------------------------------
# per-pair and aggregate estimators


def focal_from_pair(pair: VPPair, principal_point, epsilon: float = DEFAULT_FOCAL_EPSILON) -> float:
    """Focal length from one orthogonal pair: ``sqrt(-(u - p) . (v - p))``.

    The dot product must be negative for a real focal length; configurations
    where it is not are geometrically invalid and rejected.
    """
    if not pair.finite:
        raise DegenerateInput("pair with a vanishing point at infinity has no focal constraint")
    p = as_float_array(principal_point, "principal_point", (2,))
    radicand = -float(np.dot(pair.first - p, pair.second - p))
    if radicand <= 0.0:
        raise ImaginaryFocal(f"(u - p) . (v - p) = {-radicand} >= 0")
    if radicand < epsilon * epsilon:
        raise NearZeroFocal(f"focal estimate {np.sqrt(radicand)} px below {epsilon} px")
    return float(np.sqrt(radicand))


def _pair_focals(pairs, principal_point, epsilon: float) -> list[float | None]:
    out: list[float | None] = []
    for pair in pairs:
        try:
            out.append(focal_from_pair(pair, principal_point, epsilon))
        except (ImaginaryFocal, NearZeroFocal, DegenerateInput):
            out.append(None)
    return out


def estimate_focal(
    pairs,
    principal_point,
    min_pairs: int = DEFAULT_MIN_PAIRS,
    epsilon: float = DEFAULT_FOCAL_EPSILON,
) -> float:
    """Median of the surviving per-pair focal lengths.

    An even survivor count averages the two central values. Permutation
    invariant, and robust to fewer than half the pairs being corrupt.
    """
    focals = [f for f in _pair_focals(pairs, principal_point, epsilon) if f is not None]
    if len(focals) < min_pairs:
        raise InsufficientPairs(
            f"{len(focals)} usable pairs for focal estimation, need {min_pairs}"
        )
    return float(np.median(focals))


def _pair_slope(pair: VPPair, slope_epsilon: float) -> float | None:
    if pair.first_is_direction and pair.second_is_direction:
        return None  # both at infinity: the pair line is the ideal line
    if pair.first_is_direction or pair.second_is_direction:
        d = pair.first if pair.first_is_direction else pair.second
        n = np.linalg.norm(d)
        if n == 0 or abs(d[0]) <= 1e-9 * n:
            return None
        return float(d[1] / d[0])
    dx = pair.first[0] - pair.second[0]
    if abs(dx) <= slope_epsilon:
        return None
    return float((pair.first[1] - pair.second[1]) / dx)


def estimate_horizon(
    pairs,
    min_pairs: int = DEFAULT_MIN_PAIRS,
    slope_epsilon: float = DEFAULT_SLOPE_EPSILON,
) -> np.ndarray:
    """Horizon line (m, -1, q) via medians of pair slopes and point intercepts.

    Slope: median over the slopes of the lines joining each pair. Intercept:
    with the slope fixed, every finite vanishing point contributes
    ``q = y - m * x`` and the median is taken, vanishing points of
    slope-skipped pairs included. Pairs whose line is near-vertical are
    excluded from the slope median; if more than half the pairs are excluded
    the camera roll is pathological and the estimate aborts rather than
    return garbage.
    """
    pairs = list(pairs)
    if not pairs:
        raise InsufficientPairs("no pairs given")
    slopes = [_pair_slope(pair, slope_epsilon) for pair in pairs]
    usable = [s for s in slopes if s is not None]
    if len(usable) * 2 < len(pairs):
        raise NearVerticalHorizon(
            f"{len(pairs) - len(usable)} of {len(pairs)} pair lines are near-vertical"
        )
    if len(usable) < min_pairs:
        raise InsufficientPairs(
            f"{len(usable)} usable pairs for horizon estimation, need {min_pairs}"
        )
    slope = float(np.median(usable))

    intercepts = []
    for pair in pairs:
        if not pair.first_is_direction:
            intercepts.append(pair.first[1] - pair.first[0] * slope)
        if not pair.second_is_direction:
            intercepts.append(pair.second[1] - pair.second[0] * slope)
    intercept = float(np.median(intercepts))
    return np.array([slope, -1.0, intercept])


def plane_normal_from_horizon(horizon, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Road-plane normal in camera coordinates from the horizon line.

    ``n = (f * a, f * b, p_x * a + p_y * b + c)`` for horizon (a, b, c):
    the transpose of the intrinsic matrix applied to the line. Returned
    unnormalized; see :attr:`CameraCalibration.unit_normal` for the unit copy.
    """
    h = as_float_array(horizon, "horizon", (3,))
    p = intrinsics.principal_point
    n = np.array(
        [
            intrinsics.f * h[0],
            intrinsics.f * h[1],
            p[0] * h[0] + p[1] * h[1] + h[2],
        ]
    )
    if np.linalg.norm(n) < 1e-12:
        raise DegenerateNormal("horizon maps to a zero normal")
    return n


def project_to_plane(point, calibration: CameraCalibration) -> np.ndarray:
    """Back-project frame pixels onto the road plane ``Q . n = -delta``.

    Accepts a single (x, y) point or an (n, 2) batch. Points on (or too near)
    the horizon have no finite intersection with the plane and are rejected.
    """
    pts = as_points_2d(point, "point")
    single = np.asarray(point, dtype=float).ndim == 1
    p = calibration.intrinsics.principal_point
    rays = np.concatenate(
        [pts - p, np.full((len(pts), 1), calibration.intrinsics.f)], axis=1
    )
    n = calibration.plane_normal
    depth = rays @ n
    limit = 1e-9 * np.linalg.norm(rays, axis=1) * np.linalg.norm(n)
    if np.any(np.abs(depth) < limit):
        raise PointOnHorizon("point lies on or too near the horizon")
    out = -(calibration.delta / depth)[:, None] * rays
    return out[0] if single else out


def calibrate(
    pairs,
    image_size,
    min_pairs: int = DEFAULT_MIN_PAIRS,
    principal_point=None,
    focal_epsilon: float = DEFAULT_FOCAL_EPSILON,
    slope_epsilon: float = DEFAULT_SLOPE_EPSILON,
    delta: float = 1.0,
) -> CameraCalibration:
    """Full calibration from vanishing-point pairs.

    The principal point is assumed at the image centre unless overridden;
    with an explicit principal point the image size may be None. Pairs that
    fail the focal constraint are counted as rejected but still contribute
    to the horizon.
    """
    pairs = list(pairs)
    if principal_point is None:
        if image_size is None:
            raise ValueError("image_size is required when principal_point is not given")
        w, h = check_image_size(image_size)
        principal_point = np.array([w / 2.0, h / 2.0])
    else:
        principal_point = as_float_array(principal_point, "principal_point", (2,))
        if image_size is not None:
            check_image_size(image_size)

    focals = _pair_focals(pairs, principal_point, focal_epsilon)
    usable = [f for f in focals if f is not None]
    if len(usable) < min_pairs:
        raise InsufficientPairs(
            f"{len(usable)} usable pairs for focal estimation, need {min_pairs}"
        )
    f = float(np.median(usable))
    horizon = estimate_horizon(pairs, min_pairs=min_pairs, slope_epsilon=slope_epsilon)
    intrinsics = CameraIntrinsics(f, principal_point)
    normal = plane_normal_from_horizon(horizon, intrinsics)
    return CameraCalibration(
        intrinsics=intrinsics,
        horizon=horizon,
        plane_normal=normal,
        delta=delta,
        n_pairs_used=len(usable),
        n_pairs_rejected=len(pairs) - len(usable),
    )


# ---------------------------------------------------------------------------
# estimator wrapper


class VanishingPointCalibrator:
    """Scikit-learn style estimator around :func:`calibrate`.

    ``fit`` consumes vanishing-point pairs, either as a list of
    :class:`VPPair` or as an (n, 4) array of ``(u_x, u_y, v_x, v_y)`` rows;
    ``transform`` maps frame-pixel points to 3D road-plane coordinates.

    Parameters
    ----------
    image_size : (width, height) in pixels; required unless
        ``principal_point`` is given.
    principal_point : explicit principal point override (default: centre).
    min_pairs : minimum usable pairs for each median.
    focal_epsilon : smallest plausible per-pair focal length, in pixels.
    slope_epsilon : minimum horizontal separation of a pair line, in pixels.
    delta : road-plane scale applied by ``transform``.
    """

    def __init__(
        self,
        image_size=None,
        principal_point=None,
        min_pairs: int = DEFAULT_MIN_PAIRS,
        focal_epsilon: float = DEFAULT_FOCAL_EPSILON,
        slope_epsilon: float = DEFAULT_SLOPE_EPSILON,
        delta: float = 1.0,
    ):
        self.image_size = image_size
        self.principal_point = principal_point
        self.min_pairs = min_pairs
        self.focal_epsilon = focal_epsilon
        self.slope_epsilon = slope_epsilon
        self.delta = delta

    _param_names = (
        "image_size",
        "principal_point",
        "min_pairs",
        "focal_epsilon",
        "slope_epsilon",
        "delta",
    )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names}

    def set_params(self, **params) -> "VanishingPointCalibrator":
        for name, value in params.items():
            if name not in self._param_names:
                raise ValueError(f"unknown parameter {name!r} for VanishingPointCalibrator")
            setattr(self, name, value)
        return self

    @staticmethod
    def _as_pairs(X) -> list[VPPair]:
        if len(X) and isinstance(X[0], VPPair):
            return list(X)
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(
                f"X must be a list of VPPair or an (n, 4) array, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("X must contain only finite values")
        return [VPPair(row[:2], row[2:]) for row in arr]

    def fit(self, X, y=None) -> "VanishingPointCalibrator":
        pairs = self._as_pairs(X)
        if self.image_size is None and self.principal_point is None:
            raise ValueError("either image_size or principal_point must be set")
        self.calibration_ = calibrate(
            pairs,
            self.image_size,
            min_pairs=self.min_pairs,
            principal_point=self.principal_point,
            focal_epsilon=self.focal_epsilon,
            slope_epsilon=self.slope_epsilon,
            delta=self.delta,
        )
        self.focal_ = self.calibration_.intrinsics.f
        self.principal_point_ = self.calibration_.intrinsics.principal_point
        self.horizon_ = self.calibration_.horizon
        self.plane_normal_ = self.calibration_.plane_normal
        self.n_pairs_used_ = self.calibration_.n_pairs_used
        self.n_pairs_rejected_ = self.calibration_.n_pairs_rejected
        return self

    def transform(self, X) -> np.ndarray:
        """Map frame-pixel points (n, 2) to road-plane coordinates (n, 3).

        Note the asymmetry with ``fit``: fitting consumes vanishing-point
        pairs, transforming consumes image points, so there is deliberately
        no ``fit_transform``.
        """
        check_fitted(self, "calibration_")
        return project_to_plane(as_points_2d(X, "X"), self.calibration_)
