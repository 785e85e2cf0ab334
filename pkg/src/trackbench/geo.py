"""Geodesic primitives shared by every other module.

All functions work on WGS84 latitude/longitude in degrees at the API
boundary; angles (bearings, headings) are radians, clockwise from north.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MEAN_EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 point. lat/lon in degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude out of range: {self.lat}")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude out of range: {self.lon}")


@dataclass(frozen=True)
class EarthModel:
    """Spherical earth of fixed radius in meters."""

    radius: float = MEAN_EARTH_RADIUS_M

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError("earth radius must be positive")


DEFAULT_EARTH = EarthModel()


def haversine_distance(a: GeoPoint, b: GeoPoint, earth: EarthModel = DEFAULT_EARTH) -> float:
    """Ground distance in meters between two points on a spherical earth."""
    phi_a = math.radians(a.lat)
    phi_b = math.radians(b.lat)
    d_phi = phi_b - phi_a
    d_lam = math.radians(b.lon - a.lon)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(d_lam / 2.0) ** 2
    return 2.0 * earth.radius * math.asin(min(1.0, math.sqrt(h)))


def destination_point(
    origin: GeoPoint,
    bearing: float,
    distance: float,
    earth: EarthModel = DEFAULT_EARTH,
) -> GeoPoint:
    """Point reached by travelling `distance` meters from `origin` along `bearing`.

    Bearing is radians clockwise from north. Uses the direct great-circle
    formula on the spherical earth model.
    """
    if distance < 0:
        raise ValueError("distance must be non-negative")
    if distance == 0:
        return origin
    delta = distance / earth.radius  # angular distance
    phi1 = math.radians(origin.lat)
    lam1 = math.radians(origin.lon)
    sin_phi2 = math.sin(phi1) * math.cos(delta) + math.cos(phi1) * math.sin(delta) * math.cos(bearing)
    sin_phi2 = max(-1.0, min(1.0, sin_phi2))
    phi2 = math.asin(sin_phi2)
    lam2 = lam1 + math.atan2(
        math.sin(bearing) * math.sin(delta) * math.cos(phi1),
        math.cos(delta) - math.sin(phi1) * sin_phi2,
    )
    lon2 = math.degrees(lam2)
    if lon2 > 180.0:
        lon2 -= 360.0
    elif lon2 < -180.0:
        lon2 += 360.0
    return GeoPoint(math.degrees(phi2), lon2)


def intermediate_point(a: GeoPoint, b: GeoPoint, ratio: float) -> GeoPoint:
    """Point at fraction `ratio` of the way from `a` to `b`.

    Planar linear interpolation of (lat, lon). Valid only at small
    separations (peer/beacon corrections operate at meter scale); it is
    deterministic, cheap, and exact at the endpoints.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"ratio must be in [0, 1], got {ratio}")
    if ratio == 0.0:
        return a
    if ratio == 1.0:
        return b
    return GeoPoint(
        a.lat + (b.lat - a.lat) * ratio,
        a.lon + (b.lon - a.lon) * ratio,
    )


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Initial great-circle bearing from `a` to `b`, radians in [0, 2*pi)."""
    if a.lat == b.lat and a.lon == b.lon:
        raise ValueError("undefined bearing: coincident points")
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    d_lam = math.radians(b.lon - a.lon)
    y = math.sin(d_lam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(d_lam)
    return math.atan2(y, x) % (2.0 * math.pi)
