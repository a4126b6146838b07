"""WGS84 <-> transverse Mercator, Krueger series in the third flattening.

Sixth-order coefficients keep forward/inverse consistent to well below a
nanometer inside the supported band (|lon - cm| < 6 deg), so round trips are
exact to float64 noise. Scale factor 0.9996, false easting 500 km, false
northing 0 (southern-hemisphere northings are negative).
"""
from __future__ import annotations

import math

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
SCALE = 0.9996
FALSE_EASTING = 500000.0

_N = WGS84_F / (2.0 - WGS84_F)
_E2 = WGS84_F * (2.0 - WGS84_F)
_E = math.sqrt(_E2)
# rectifying radius
_A_HAT = WGS84_A / (1 + _N) * (1 + _N**2 / 4 + _N**4 / 64 + _N**6 / 256)

_ALPHA = (
    _N / 2 - 2 * _N**2 / 3 + 5 * _N**3 / 16 + 41 * _N**4 / 180
    - 127 * _N**5 / 288 + 7891 * _N**6 / 37800,
    13 * _N**2 / 48 - 3 * _N**3 / 5 + 557 * _N**4 / 1440 + 281 * _N**5 / 630
    - 1983433 * _N**6 / 1935360,
    61 * _N**3 / 240 - 103 * _N**4 / 140 + 15061 * _N**5 / 26880
    + 167603 * _N**6 / 181440,
    49561 * _N**4 / 161280 - 179 * _N**5 / 168 + 6601661 * _N**6 / 7257600,
    34729 * _N**5 / 80640 - 3418889 * _N**6 / 1995840,
    212378941 * _N**6 / 319334400,
)
_BETA = (
    _N / 2 - 2 * _N**2 / 3 + 37 * _N**3 / 96 - _N**4 / 360
    - 81 * _N**5 / 512 + 96199 * _N**6 / 604800,
    _N**2 / 48 + _N**3 / 15 - 437 * _N**4 / 1440 + 46 * _N**5 / 105
    - 1118711 * _N**6 / 3870720,
    17 * _N**3 / 480 - 37 * _N**4 / 840 - 209 * _N**5 / 4480
    + 5569 * _N**6 / 90720,
    4397 * _N**4 / 161280 - 11 * _N**5 / 504 - 830251 * _N**6 / 7257600,
    4583 * _N**5 / 161280 - 108847 * _N**6 / 3991680,
    20648693 * _N**6 / 638668800,
)

MAX_LAT = 84.0
MAX_LON_OFFSET = 6.0


class ProjectionDomainError(ValueError):
    """Latitude or meridian distance outside the supported band."""


def _wrap_degrees(d: float) -> float:
    return (d + 180.0) % 360.0 - 180.0


def _tau_prime(tau: float) -> float:
    sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
    return tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)


def wgs84_to_tm(lat: float, lon: float, central_meridian: float) -> tuple[float, float]:
    """(lat, lon) degrees -> (easting, northing) meters."""
    if abs(lat) >= MAX_LAT:
        raise ProjectionDomainError(f"latitude {lat} outside |lat| < {MAX_LAT}")
    dlon = _wrap_degrees(lon - central_meridian)
    if abs(dlon) >= MAX_LON_OFFSET:
        raise ProjectionDomainError(
            f"longitude {lon} more than {MAX_LON_OFFSET} deg from meridian {central_meridian}")
    phi = math.radians(lat)
    lam = math.radians(dlon)
    taup = _tau_prime(math.tan(phi))
    xi = math.atan2(taup, math.cos(lam))
    eta = math.asinh(math.sin(lam) / math.hypot(taup, math.cos(lam)))
    x, y = eta, xi
    for j, a in enumerate(_ALPHA, start=1):
        x += a * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
        y += a * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
    return (FALSE_EASTING + SCALE * _A_HAT * x, SCALE * _A_HAT * y)


def tm_to_wgs84(easting: float, northing: float, central_meridian: float) -> tuple[float, float]:
    """(easting, northing) meters -> (lat, lon) degrees."""
    eta = (easting - FALSE_EASTING) / (SCALE * _A_HAT)
    xi = northing / (SCALE * _A_HAT)
    xip, etap = xi, eta
    for j, b in enumerate(_BETA, start=1):
        xip -= b * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        etap -= b * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
    taup = math.sin(xip) / math.hypot(math.sinh(etap), math.cos(xip))
    lam = math.atan2(math.sinh(etap), math.cos(xip))
    # Newton-invert tau'(tau); converges in a handful of steps
    tau = taup / math.sqrt(1.0 - _E2)
    for _ in range(8):
        delta = taup - _tau_prime(tau)
        if abs(delta) < 1e-15 * max(1.0, abs(taup)):
            break
        dtau = (delta * (1.0 + (1.0 - _E2) * tau * tau)
                / ((1.0 - _E2) * math.hypot(1.0, tau) * math.hypot(1.0, _tau_prime(tau))))
        tau += dtau
    lat = math.degrees(math.atan(tau))
    lon = _wrap_degrees(central_meridian + math.degrees(lam))
    if abs(lat) >= MAX_LAT or abs(_wrap_degrees(lon - central_meridian)) >= MAX_LON_OFFSET:
        raise ProjectionDomainError(
            f"({easting}, {northing}) maps outside the supported band")
    return (lat, lon)


def project_wgs84_tm(a: float, b: float, central_meridian: float,
                     direction: str) -> tuple[float, float]:
    """Forward maps (lat, lon) -> (easting, northing); inverse maps back."""
    if direction == "forward":
        return wgs84_to_tm(a, b, central_meridian)
    if direction == "inverse":
        return tm_to_wgs84(a, b, central_meridian)
    raise ValueError(f"unknown direction {direction!r}")
