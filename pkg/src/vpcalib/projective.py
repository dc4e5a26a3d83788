"""Homogeneous-coordinate arithmetic and the diamond-space parametrization.

Points and lines of the real projective plane are plain float arrays with a
trailing dimension of 3. A point ``(x, y, w)`` represents the Cartesian
position ``(x/w, y/w)``; ``w == 0`` is a point at infinity (a pure direction).
A line ``(a, b, c)`` is the locus ``ax + by + c = 0``. Both are equivalence
classes under nonzero scaling, and every function here respects that: mapping
any representative of a point gives the same result.

The diamond-space mapping sends the whole projective plane into the closed
diamond ``|X| + |Y| <= 1``, which makes unbounded vanishing-point positions
representable on a finite grid. Sign branches use the fixed convention
``sgn(0) = +1`` and are evaluated on a canonical representative (last
significant coordinate positive), which keeps the mapping total, bounded and
exactly invertible; points on the coordinate axes land on one deterministic
branch, with no continuity claim across axes.

All functions are pure, accept ``(..., 3)`` batches, and are thread-safe.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInput, InvalidScale

__all__ = [
    "sgn",
    "canonical",
    "to_diamond",
    "from_diamond",
    "line_through",
    "scale_point",
    "dehomogenize",
    "is_ideal",
    "cross_residual",
    "projectively_equal",
    "incidence_residual",
]


def sgn(t) -> np.ndarray:
    """Sign with the convention sgn(0) = +1, applied elementwise."""
    return np.where(np.asarray(t, dtype=float) >= 0.0, 1.0, -1.0)


def _as_homogeneous(p, name: str = "point") -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.shape == () or arr.shape[-1] != 3:
        raise ValueError(f"{name} must have trailing dimension 3, got shape {arr.shape}")
    return arr


def canonical(p) -> np.ndarray:
    """Representative with w > 0, falling back to y > 0 then x > 0 when zero.

    Unique up to positive scale, which is what the diamond sign branches need.
    """
    p = _as_homogeneous(p)
    x, y, w = p[..., 0], p[..., 1], p[..., 2]
    if np.any((x == 0) & (y == 0) & (w == 0)):
        raise ValueError("(0, 0, 0) is not a projective point")
    flip = np.where(w != 0, np.sign(w), np.where(y != 0, np.sign(y), np.sign(x)))
    return p * flip[..., None]


def to_diamond(p) -> np.ndarray:
    """Map projective points into diamond-space coordinates.

    The result's last coordinate has magnitude ``|x| + |y| + |w|`` of the
    canonical representative, so it is never zero and the dehomogenized image
    always satisfies ``|X| + |Y| <= 1``: the whole plane lands inside the
    diamond, points at infinity included.
    """
    c = canonical(p)
    x, y, w = c[..., 0], c[..., 1], c[..., 2]
    third = sgn(x) * sgn(y) * x + y + sgn(y) * w
    return np.stack([-w, -x, third], axis=-1)


def from_diamond(d) -> np.ndarray:
    """Map diamond-space points back to the original projective plane.

    Inverse of :func:`to_diamond` up to projective scale.
    """
    c = canonical(d)
    x, y, w = c[..., 0], c[..., 1], c[..., 2]
    mid = np.abs(x) + np.abs(y) - w
    return np.stack([y, mid, x], axis=-1)


def line_through(p, q) -> np.ndarray:
    """Homogeneous line through two distinct projective points (their cross product)."""
    p = _as_homogeneous(p, "p")
    q = _as_homogeneous(q, "q")
    line = np.cross(p, q)
    norm = np.linalg.norm(line, axis=-1)
    limit = 1e-12 * np.linalg.norm(p, axis=-1) * np.linalg.norm(q, axis=-1)
    if np.any(norm <= limit):
        raise DegenerateInput("points are projectively equal; no unique line")
    return line


def scale_point(p, s: float) -> np.ndarray:
    """Scale the Cartesian position by ``s``: (x, y, w) -> (s*x, s*y, w).

    Points at infinity are fixed points of this map.
    """
    if not np.isfinite(s) or s <= 0:
        raise InvalidScale(f"scale must be positive and finite, got {s!r}")
    p = _as_homogeneous(p)
    out = p.copy()
    out[..., 0] *= s
    out[..., 1] *= s
    return out


def is_ideal(p, rel_eps: float = 1e-9) -> np.ndarray:
    """True where ``w`` is negligible against the (x, y) part: a point at infinity."""
    p = _as_homogeneous(p)
    xy = np.hypot(p[..., 0], p[..., 1])
    return np.abs(p[..., 2]) <= rel_eps * xy


def dehomogenize(p) -> np.ndarray:
    """Cartesian (x/w, y/w) coordinates. The caller guards against w ~ 0."""
    p = _as_homogeneous(p)
    return p[..., :2] / p[..., 2:3]


def cross_residual(p, q) -> np.ndarray:
    """Norm of the cross product of unit-normalized representatives.

    Zero iff the points are projectively equal; used as the equality criterion
    everywhere instead of componentwise ratios, which break down near w = 0.
    """
    p = _as_homogeneous(p, "p")
    q = _as_homogeneous(q, "q")
    denom = np.linalg.norm(p, axis=-1) * np.linalg.norm(q, axis=-1)
    return np.linalg.norm(np.cross(p, q), axis=-1) / denom


def projectively_equal(p, q, tol: float = 1e-9) -> bool:
    return bool(np.all(cross_residual(p, q) <= tol))


def incidence_residual(line, point) -> np.ndarray:
    """|<line, point>| after normalizing both; zero iff the point lies on the line."""
    line = _as_homogeneous(line, "line")
    point = _as_homogeneous(point, "point")
    denom = np.linalg.norm(line, axis=-1) * np.linalg.norm(point, axis=-1)
    return np.abs(np.sum(line * point, axis=-1)) / denom
