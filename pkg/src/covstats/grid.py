"""Pixel grids, discretized balls and window erosion.

All spatial quantities in this package live on a regular pixel grid over a
rectangular window W.  A pixel is represented by its centre; a set A is
discretized as the set of pixels whose centres fall in A (pixel-centre rule,
no antialiasing).  Integrals become h^2-weighted sums over pixel centres.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as _gamma_fn
from math import pi

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.signal import fftconvolve

from .errors import BallOutsideWindow, EmptyErosion, GridError, GridMismatch, RangeViolation

# relative slack for boundary comparisons; extents and radii are specified
# as decimal numbers that are not exact binary floats
REL_TOL = 1e-9


@dataclass(frozen=True)
class GridSpec:
    """Rectangular window with pixel spacing h and a simulation margin.

    The margin extends the window for point-process simulation only; all
    rasterized fields and all estimators use the core window.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    h: float
    margin: float = 0.0

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise GridError("window extents must be positive")
        if self.h <= 0:
            raise GridError("pixel spacing h must be positive")
        if self.margin < 0:
            raise GridError("margin must be non-negative")
        for extent in (self.x_max - self.x_min, self.y_max - self.y_min):
            ratio = extent / self.h
            if abs(ratio - round(ratio)) > REL_TOL * max(1.0, ratio):
                raise GridError(
                    "window extent %g is not an integer multiple of h=%g" % (extent, self.h)
                )

    @property
    def nx(self) -> int:
        return int(round((self.x_max - self.x_min) / self.h))

    @property
    def ny(self) -> int:
        return int(round((self.y_max - self.y_min) / self.h))

    @property
    def shape(self) -> tuple[int, int]:
        # row-major (ny, nx): rows run along y, columns along x
        return (self.ny, self.nx)

    @property
    def pixel_area(self) -> float:
        return self.h * self.h

    @property
    def window_area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def centers_x(self) -> np.ndarray:
        return self.x_min + (np.arange(self.nx) + 0.5) * self.h

    def centers_y(self) -> np.ndarray:
        return self.y_min + (np.arange(self.ny) + 0.5) * self.h

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, Y) arrays of pixel-centre coordinates, shape (ny, nx)."""
        return np.meshgrid(self.centers_x(), self.centers_y())

    def extended_bounds(self) -> tuple[float, float, float, float]:
        """Simulation window including the margin: (x_lo, x_hi, y_lo, y_hi)."""
        m = self.margin
        return (self.x_min - m, self.x_max + m, self.y_min - m, self.y_max + m)

    def same_geometry(self, other: "GridSpec") -> bool:
        return (
            abs(self.x_min - other.x_min) <= REL_TOL
            and abs(self.y_min - other.y_min) <= REL_TOL
            and abs(self.h - other.h) <= REL_TOL * self.h
            and self.shape == other.shape
        )


@dataclass
class ScalarField:
    """Real-valued function sampled at pixel centres, shape (ny, nx).

    Fields are non-negative unless `signed` is set (raw Gaussian fields are
    the one signed case in this package).
    """

    spec: GridSpec
    values: np.ndarray
    signed: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.spec.shape:
            raise GridMismatch(
                "field shape %s does not match grid %s" % (self.values.shape, self.spec.shape)
            )
        if not self.signed and np.any(self.values < 0):
            raise RangeViolation("negative value in unsigned field")

    def integral(self) -> float:
        """Riemann sum of the field over the window."""
        return float(self.values.sum() * self.spec.pixel_area)


@dataclass
class BinaryField:
    """Indicator of a random closed set, sampled at pixel centres."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=bool)
        if self.values.shape != self.spec.shape:
            raise GridMismatch("indicator shape does not match grid")

    def coverage_fraction(self) -> float:
        return float(self.values.mean())


@dataclass
class RegionMask:
    """Subset of pixels of a grid, e.g. an eroded window."""

    spec: GridSpec
    included: np.ndarray

    def __post_init__(self):
        self.included = np.asarray(self.included, dtype=bool)
        if self.included.shape != self.spec.shape:
            raise GridMismatch("mask shape does not match grid")

    @property
    def count(self) -> int:
        return int(self.included.sum())

    @property
    def area(self) -> float:
        return self.count * self.spec.pixel_area


def lebesgue_ball(t: float, d: int = 2) -> float:
    """Volume kappa_d * t^d of the Euclidean ball of radius t in R^d."""
    if t < 0:
        raise ValueError("radius must be non-negative")
    kappa = pi ** (d / 2.0) / _gamma_fn(d / 2.0 + 1.0)
    return kappa * t**d


def erode(spec: GridSpec, t: float) -> RegionMask:
    """Pixels x of W whose closed ball B(x, t) is contained in W.

    Raises EmptyErosion when no pixel centre survives.
    """
    if t < 0:
        raise ValueError("radius must be non-negative")
    tol = REL_TOL * max(1.0, t)
    cx = spec.centers_x()
    cy = spec.centers_y()
    ok_x = (cx >= spec.x_min + t - tol) & (cx <= spec.x_max - t + tol)
    ok_y = (cy >= spec.y_min + t - tol) & (cy <= spec.y_max - t + tol)
    included = ok_y[:, None] & ok_x[None, :]
    if not included.any():
        raise EmptyErosion("W eroded by t=%g contains no pixel centre" % t)
    return RegionMask(spec, included)


def ball_offsets(spec: GridSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Integer pixel offsets (dy, dx) whose centres lie in the closed ball
    of radius t around a pixel centre.

    t = 0 gives the empty offset list (a point is Lebesgue-null); for
    0 < t < h only the centre pixel survives.
    """
    if t < 0:
        raise ValueError("radius must be non-negative")
    if t == 0.0:
        z = np.zeros(0, dtype=np.intp)
        return z, z
    rho = t / spec.h
    rho2 = rho * rho * (1.0 + REL_TOL)
    R = int(np.floor(rho + REL_TOL))
    rng = np.arange(-R, R + 1)
    dy, dx = np.meshgrid(rng, rng, indexing="ij")
    keep = (dx * dx + dy * dy) <= rho2
    return dy[keep].astype(np.intp), dx[keep].astype(np.intp)


def ball_pixel_area(spec: GridSpec, t: float) -> float:
    """Area of the discretized ball: pixel count times h^2.

    Converges to pi*t^2 as h -> 0; tests and estimators use this value, not
    the continuum limit.
    """
    dy, _ = ball_offsets(spec, t)
    return dy.size * spec.pixel_area


def ball_mass(fld: ScalarField, center: tuple[float, float], t: float) -> float:
    """Mass h^2 * sum of the field over pixel centres within distance t of
    `center`.  Requires B(center, t) to be contained in the window.
    """
    spec = fld.spec
    cx, cy = float(center[0]), float(center[1])
    tol = REL_TOL * max(1.0, t)
    if (
        cx - t < spec.x_min - tol
        or cx + t > spec.x_max + tol
        or cy - t < spec.y_min - tol
        or cy + t > spec.y_max + tol
    ):
        raise BallOutsideWindow("ball B((%g, %g), %g) leaves the window" % (cx, cy, t))
    if t == 0.0:
        return 0.0
    # candidate index window, then exact distance test
    ix_lo = max(0, int(np.floor((cx - t - spec.x_min) / spec.h - 0.5)))
    ix_hi = min(spec.nx - 1, int(np.ceil((cx + t - spec.x_min) / spec.h - 0.5)))
    iy_lo = max(0, int(np.floor((cy - t - spec.y_min) / spec.h - 0.5)))
    iy_hi = min(spec.ny - 1, int(np.ceil((cy + t - spec.y_min) / spec.h - 0.5)))
    gx = spec.x_min + (np.arange(ix_lo, ix_hi + 1) + 0.5) * spec.h
    gy = spec.y_min + (np.arange(iy_lo, iy_hi + 1) + 0.5) * spec.h
    d2 = (gx[None, :] - cx) ** 2 + (gy[:, None] - cy) ** 2
    keep = d2 <= t * t * (1.0 + REL_TOL)
    sub = fld.values[iy_lo : iy_hi + 1, ix_lo : ix_hi + 1]
    return float(sub[keep].sum() * spec.pixel_area)


def ball_mass_map(fld: ScalarField, t: float) -> np.ndarray:
    """Ball masses h^2 * sum_{|c - x| <= t} field(c) for every pixel centre x.

    Computed in one FFT convolution with the 0/1 disc kernel; values are only
    meaningful on erode(spec, t), where the ball does not leave the window.
    """
    spec = fld.spec
    if t == 0.0:
        return np.zeros(spec.shape)
    dy, dx = ball_offsets(spec, t)
    R = int(max(dy.max(), dx.max(), -dy.min(), -dx.min()))
    kernel = np.zeros((2 * R + 1, 2 * R + 1))
    kernel[dy + R, dx + R] = 1.0
    out = fftconvolve(fld.values, kernel, mode="same") * spec.pixel_area
    if not fld.signed:
        # FFT round-off can leave -1e-17 residues on a non-negative field
        np.maximum(out, 0.0, out=out)
    return out


def dilate_indicator(fld: BinaryField, t: float) -> np.ndarray:
    """Boolean map: does the closed ball B(x, t) hit the set (pixel rule)?

    B(x, 0) = {x}, so t = 0 returns the set itself (unlike ball masses,
    where a single point carries no Lebesgue measure)."""
    spec = fld.spec
    if t == 0.0:
        return fld.values.copy()
    dy, dx = ball_offsets(spec, t)
    R = int(max(dy.max(), dx.max(), -dy.min(), -dx.min()))
    kernel = np.zeros((2 * R + 1, 2 * R + 1), dtype=bool)
    kernel[dy + R, dx + R] = True
    return binary_dilation(fld.values, structure=kernel)
