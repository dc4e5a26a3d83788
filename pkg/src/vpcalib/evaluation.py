"""Scale-free calibration error from ground-truth distance measurements.

Absolute plane distances depend on the unrecoverable scale ``delta``, so the
quality metric compares ratios: for measurements i and j, the relative error
of the measured ratio against the ground-truth ratio. Multiplying every
measured distance by a constant cancels, which is exactly the property that
makes the metric usable without a known scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import as_float_array
from .calibration import CameraCalibration, project_to_plane
from .errors import (
    InsufficientMeasurements,
    PointOnHorizon,
    UnprojectablePoint,
)

__all__ = [
    "DistanceMeasurement",
    "CalibrationReport",
    "measured_distance",
    "ratio_error",
    "evaluate",
    "PAIR_MODES",
]

PAIR_MODES = ("ordered", "unordered-min", "unordered-first")


@dataclass(frozen=True)
class DistanceMeasurement:
    """Two frame-pixel points and the metric distance between them on the road."""

    a: np.ndarray
    b: np.ndarray
    ground_truth: float

    def __post_init__(self):
        object.__setattr__(self, "a", as_float_array(self.a, "a", (2,)))
        object.__setattr__(self, "b", as_float_array(self.b, "b", (2,)))
        if np.array_equal(self.a, self.b):
            raise ValueError("measurement endpoints must differ")
        if not (np.isfinite(self.ground_truth) and self.ground_truth > 0):
            raise ValueError(f"ground truth distance must be positive, got {self.ground_truth}")


@dataclass(frozen=True)
class CalibrationReport:
    """Per-pair ratio errors and their mean (as a fraction, not percent)."""

    per_pair_errors: tuple
    mean_error: float
    n_measurements: int
    n_skipped: int
    pair_mode: str = "ordered"


def measured_distance(measurement: DistanceMeasurement, calibration: CameraCalibration) -> float:
    """Distance between the two endpoints after projection onto the road plane."""
    try:
        qa = project_to_plane(measurement.a, calibration)
        qb = project_to_plane(measurement.b, calibration)
    except PointOnHorizon as exc:
        raise UnprojectablePoint(str(exc)) from exc
    return float(np.linalg.norm(qa - qb))


def ratio_error(i: int, j: int, measured, ground_truth) -> float:
    """Relative error of the measured i/j distance ratio against ground truth."""
    d_i, d_j = float(measured[i]), float(measured[j])
    g_i, g_j = float(ground_truth[i]), float(ground_truth[j])
    if d_j == 0.0 or g_j == 0.0 or g_i == 0.0:
        raise ZeroDivisionError("distance ratios need nonzero denominators")
    truth = g_i / g_j
    return abs(d_i / d_j - truth) / truth


def evaluate(
    measurements,
    calibration: CameraCalibration,
    pair_mode: str = "ordered",
) -> CalibrationReport:
    """Mean ratio error over all measurement pairs.

    Measurements with an unprojectable endpoint are skipped and counted, not
    failed. ``pair_mode`` picks how the asymmetric per-pair error is
    aggregated: every ordered pair (i, j), i != j (the default), the minimum
    of the two orientations, or only the i < j orientation. The summation
    order is fixed by measurement index, so results are deterministic.
    """
    if pair_mode not in PAIR_MODES:
        raise ValueError(f"pair_mode must be one of {PAIR_MODES}, got {pair_mode!r}")
    measured, truth = [], []
    n_skipped = 0
    for m in measurements:
        try:
            measured.append(measured_distance(m, calibration))
        except UnprojectablePoint:
            n_skipped += 1
            continue
        truth.append(m.ground_truth)
    if len(measured) < 2:
        raise InsufficientMeasurements(
            f"{len(measured)} projectable measurements, need at least 2"
        )

    errors = []
    n = len(measured)
    if pair_mode == "ordered":
        for i in range(n):
            for j in range(n):
                if i != j:
                    errors.append((i, j, ratio_error(i, j, measured, truth)))
    else:
        for i in range(n):
            for j in range(i + 1, n):
                r_ij = ratio_error(i, j, measured, truth)
                if pair_mode == "unordered-min":
                    r_ij = min(r_ij, ratio_error(j, i, measured, truth))
                errors.append((i, j, r_ij))
    mean = float(np.mean([e[2] for e in errors]))
    return CalibrationReport(
        per_pair_errors=tuple(errors),
        mean_error=mean,
        n_measurements=len(measured),
        n_skipped=n_skipped,
        pair_mode=pair_mode,
    )
