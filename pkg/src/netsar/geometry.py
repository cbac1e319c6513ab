"""Spatial geometry for multistatic ground imaging.

Bistatic distances and their far-field approximations, composite look
directions, beam-cone ground footprints, and the rotation between the
ground frame and per-patch (range, cross) frames.

All slicing computations take positions relative to an explicit
illuminated-region center; callers pass the center instead of assuming
the scene origin. Everything here is a pure function over immutable
values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, InvalidBeamError

_DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class GroundPoint:
    """A point in the ground frame, z up (z = 0 on the ground plane)."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError("GroundPoint coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def horizontal(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class BaseStation:
    """An elevated station with a uniform linear antenna array.

    The array is centered on the station position, lies in a horizontal
    plane, and points along ``array_orientation`` (azimuth, radians).
    ``layers`` optionally stacks extra tilted rows above the base layer,
    given as (antenna count, tilt angle) pairs.
    """

    position: GroundPoint
    antenna_count: int = 1
    antenna_spacing: float = 0.5
    array_orientation: float = 0.0
    layers: tuple[tuple[int, float], ...] = ()
    station_id: str = "bs"

    def __post_init__(self):
        if self.position.z <= 0:
            raise ValueError("station height must be positive")
        if self.antenna_count < 1:
            raise ValueError("antenna_count must be >= 1")
        if self.antenna_spacing <= 0:
            raise ValueError("antenna_spacing must be positive")
        for count, tilt in self.layers:
            if count < 1:
                raise ValueError("layer antenna count must be >= 1")
            if not 0.0 <= tilt < math.pi / 2:
                raise ValueError("layer tilt must lie in [0, pi/2)")

    @property
    def height(self) -> float:
        return self.position.z

    def antenna_positions(self) -> np.ndarray:
        """Phase centers of the base layer, shape (antenna_count, 3)."""
        axis = np.array(
            [math.cos(self.array_orientation), math.sin(self.array_orientation), 0.0]
        )
        offsets = (
            np.arange(self.antenna_count) - (self.antenna_count - 1) / 2.0
        ) * self.antenna_spacing
        return self.position.as_array()[None, :] + offsets[:, None] * axis[None, :]


@dataclass(frozen=True)
class BeamSpec:
    """A hard-edged illumination cone.

    ``open_angle`` is the full cone angle, ``tilt_angle`` the deviation of
    the beam axis from vertical, and ``planar_angle`` the azimuth of the
    beam axis in the ground plane.
    """

    open_angle: float
    tilt_angle: float
    planar_angle: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.open_angle < math.pi:
            raise InvalidBeamError(f"open_angle {self.open_angle} outside (0, pi)")
        if not 0.0 <= self.tilt_angle < math.pi / 2:
            raise InvalidBeamError(f"tilt_angle {self.tilt_angle} outside [0, pi/2)")
        if self.tilt_angle + self.open_angle / 2 >= math.pi / 2:
            raise InvalidBeamError(
                "cone edge parallel to ground: tilt + open/2 must stay below pi/2"
            )


@dataclass(frozen=True)
class EllipseFootprint:
    """Elliptic ground footprint of a tilted beam cone."""

    center: GroundPoint
    eccentricity: float
    semi_major: float
    semi_minor: float
    major_axis_azimuth: float

    def __post_init__(self):
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError("eccentricity must lie in [0, 1)")
        if self.semi_major <= 0:
            raise ValueError("semi_major must be positive")
        expected_minor = self.semi_major * math.sqrt(1.0 - self.eccentricity**2)
        if not math.isclose(self.semi_minor, expected_minor, rel_tol=1e-9):
            raise ValueError("semi_minor inconsistent with semi_major and eccentricity")


def _rebased(p: GroundPoint, center: GroundPoint) -> np.ndarray:
    return p.as_array() - center.as_array()


_ORIGIN = GroundPoint(0.0, 0.0, 0.0)


def bistatic_sum(tx: GroundPoint, rx: GroundPoint, center: GroundPoint = _ORIGIN) -> np.ndarray:
    """Sum of the unit vectors from the region center toward tx and rx.

    This is the unnormalized composite direction; its norm is the bistatic
    scale factor (2 for monostatic, shrinking with the bistatic angle).
    """
    r1 = _rebased(tx, center)
    r2 = _rebased(rx, center)
    n1 = np.linalg.norm(r1)
    n2 = np.linalg.norm(r2)
    if n1 <= 0 or n2 <= 0:
        raise ValueError("station coincides with the region center")
    return r1 / n1 + r2 / n2


def bistatic_direction(
    tx: GroundPoint, rx: GroundPoint, center: GroundPoint = _ORIGIN
) -> np.ndarray:
    """Unit composite look direction in the ground plane.

    Equal-travel-time loci are straight lines perpendicular to this
    vector under the far-field approximation.
    """
    s = bistatic_sum(tx, rx, center)[:2]
    norm = np.linalg.norm(s)
    if norm < _DEGENERATE_EPS:
        raise DegenerateGeometryError(
            "tx and rx directions cancel; composite direction undefined"
        )
    return s / norm


def bistatic_factor(
    tx: GroundPoint, rx: GroundPoint, center: GroundPoint = _ORIGIN
) -> float:
    """Horizontal norm of the composite direction sum (range scale factor)."""
    return float(np.linalg.norm(bistatic_sum(tx, rx, center)[:2]))


def bistatic_range(
    tx: GroundPoint,
    rx: GroundPoint,
    p: GroundPoint,
    center: GroundPoint = _ORIGIN,
) -> tuple[float, float]:
    """Exact and far-field-approximate bistatic path lengths through p.

    Returns (exact, approx) where exact = |p - tx| + |p - rx| and the
    approximation linearizes both legs about the region center. Both are
    returned so callers can bound the approximation error.
    """
    pt = p.as_array()
    exact = float(
        np.linalg.norm(pt - tx.as_array()) + np.linalg.norm(pt - rx.as_array())
    )
    r1 = _rebased(tx, center)
    r2 = _rebased(rx, center)
    rel = pt - center.as_array()
    approx = float(
        np.linalg.norm(r1)
        + np.linalg.norm(r2)
        - rel @ (r1 / np.linalg.norm(r1) + r2 / np.linalg.norm(r2))
    )
    return exact, approx


def beam_footprint(bs: BaseStation, beam: BeamSpec) -> EllipseFootprint:
    """Ground ellipse illuminated by a tilted cone from the station apex."""
    if beam.tilt_angle + beam.open_angle / 2 >= math.pi / 2:
        raise InvalidBeamError("cone edge parallel to ground")
    h = bs.height
    phi = beam.tilt_angle
    theta = beam.open_angle
    psi = beam.planar_angle
    cx = bs.position.x + h * math.tan(phi) * math.cos(psi)
    cy = bs.position.y + h * math.tan(phi) * math.sin(psi)
    ecc = math.sin(phi) / math.cos(theta / 2)
    a = 0.5 * h * (math.tan(phi + theta / 2) - math.tan(phi - theta / 2))
    b = a * math.sqrt(1.0 - ecc**2)
    return EllipseFootprint(
        center=GroundPoint(cx, cy, 0.0),
        eccentricity=ecc,
        semi_major=a,
        semi_minor=b,
        major_axis_azimuth=psi,
    )


def point_in_footprint(p: GroundPoint, f: EllipseFootprint) -> bool:
    """True iff p lies inside or on the footprint ellipse."""
    dx = p.x - f.center.x
    dy = p.y - f.center.y
    ca = math.cos(f.major_axis_azimuth)
    sa = math.sin(f.major_axis_azimuth)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return (u / f.semi_major) ** 2 + (v / f.semi_minor) ** 2 <= 1.0


def points_in_footprint(xy: np.ndarray, f: EllipseFootprint) -> np.ndarray:
    """Vectorized footprint membership for an (N, 2) array of ground points."""
    dx = xy[:, 0] - f.center.x
    dy = xy[:, 1] - f.center.y
    ca = math.cos(f.major_axis_azimuth)
    sa = math.sin(f.major_axis_azimuth)
    u = dx * ca + dy * sa
    v = -dx * sa + dy * ca
    return (u / f.semi_major) ** 2 + (v / f.semi_minor) ** 2 <= 1.0


@dataclass(frozen=True)
class RotatedFrame:
    """Rotation between the ground frame and a patch (range, cross) frame.

    Range axis = the given direction; cross axis = range axis rotated
    +90 degrees counterclockwise (fixed handedness convention).
    """

    direction: np.ndarray
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("direction must be a unit vector")
        cross = np.array([-d[1], d[0]])
        object.__setattr__(self, "matrix", np.stack([d, cross]))

    def to_patch(self, xy: np.ndarray) -> np.ndarray:
        """Ground (…, 2) coordinates to (range, cross) patch coordinates."""
        return np.asarray(xy, dtype=float) @ self.matrix.T

    def to_ground(self, rc: np.ndarray) -> np.ndarray:
        """(range, cross) patch coordinates back to the ground frame."""
        return np.asarray(rc, dtype=float) @ self.matrix


def rotated_frame(direction: np.ndarray) -> RotatedFrame:
    """Frame whose range axis is the given unit direction."""
    return RotatedFrame(direction=np.asarray(direction, dtype=float))
