"""Stationary Gaussian random fields and derived mark fields.

The sampler uses circulant embedding of the covariance on a doubled torus:
with eigenvalue array lam = fft2(C) of the wrapped covariance block, the
synthesis X = Re ifft2(sqrt(lam) * fft2(eps)), eps iid standard normal, has
exactly the embedded covariance (it is white noise circularly convolved with
the kernel ifft2(sqrt(lam))).  Cropping the torus to the grid yields the
target field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import EmbeddingFailure, RangeViolation
from .grid import GridSpec, ScalarField

# pixel-count caps for the two synthesis paths
CIRCULANT_MAX_PIXELS = 1_000_000
DENSE_MAX_PIXELS = 10_000

# relative tolerance below which negative embedding eigenvalues are clipped
EIGEN_CLIP_REL = 1e-9

# stream tags so every consumer of a master seed draws from its own substream
STREAM_FIELD = 1
STREAM_GERMS_1 = 2
STREAM_GERMS_2 = 3
STREAM_LAMBDA = 4
STREAM_POINTS_2 = 5
STREAM_CHAIN = 6


@dataclass(frozen=True)
class SeedKey:
    """Deterministic RNG stream: (master seed, replicate, component).

    Same key, same platform => bit-identical draws; distinct keys give
    independent streams.
    """

    master: int
    replicate: int = 0
    component: int = 0

    def __post_init__(self):
        if self.master < 0 or self.replicate < 0 or self.component < 0:
            raise ValueError("seed key parts must be non-negative")

    def rng(self) -> np.random.Generator:
        seq = np.random.SeedSequence([self.master, self.replicate, self.component])
        return np.random.default_rng(seq)


@dataclass(frozen=True)
class ExpCovariance:
    """Isotropic exponential covariance sigma2 * exp(-beta * distance)."""

    sigma2: float
    beta: float

    def __post_init__(self):
        if self.sigma2 < 0 or self.beta < 0:
            raise ValueError("sigma2 and beta must be non-negative")

    def at_distance(self, rho):
        return self.sigma2 * np.exp(-self.beta * np.asarray(rho, dtype=np.float64))


@dataclass(frozen=True)
class MeanSurface:
    """Catalogue of mean / intensity surfaces.

    kind "constant": m(x, y) = value
    kind "planar":   m(x, y) = (x + y) / scale
    kind "ramp":     m(x, y) = y / scale
    """

    kind: str
    value: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "planar", "ramp"):
            raise ValueError("unknown mean surface kind %r" % (self.kind,))
        if self.kind in ("planar", "ramp") and self.scale == 0:
            raise ValueError("scale must be non-zero")

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "constant":
            return np.full(np.broadcast(x, y).shape, self.value)
        if self.kind == "planar":
            return (x + y) / self.scale
        return y / self.scale

    def on_grid(self, spec: GridSpec) -> np.ndarray:
        xx, yy = spec.center_mesh()
        return self.evaluate(xx, yy)

    def is_affine_coefficients(self) -> tuple[float, float, float]:
        """Coefficients (a0, ax, ay) with m(x,y) = a0 + ax*x + ay*y."""
        if self.kind == "constant":
            return (self.value, 0.0, 0.0)
        if self.kind == "planar":
            return (0.0, 1.0 / self.scale, 1.0 / self.scale)
        return (0.0, 0.0, 1.0 / self.scale)


def _embedding_eigenvalues(spec: GridSpec, cov, factor: int):
    """Eigenvalues of the wrapped covariance on a factor-doubled torus."""
    Ny = sfft.next_fast_len(factor * spec.ny)
    Nx = sfft.next_fast_len(factor * spec.nx)
    ky = np.minimum(np.arange(Ny), Ny - np.arange(Ny)) * spec.h
    kx = np.minimum(np.arange(Nx), Nx - np.arange(Nx)) * spec.h
    rho = np.hypot(ky[:, None], kx[None, :])
    block = cov.at_distance(rho)
    lam = sfft.fft2(block).real
    return lam, (Ny, Nx)


def _sample_circulant(spec: GridSpec, cov, rng: np.random.Generator) -> np.ndarray:
    last_min = None
    for factor in (2, 4):
        lam, (Ny, Nx) = _embedding_eigenvalues(spec, cov, factor)
        lam_max = float(lam.max())
        lam_min = float(lam.min())
        last_min = lam_min
        if lam_min >= -EIGEN_CLIP_REL * lam_max:
            np.maximum(lam, 0.0, out=lam)
            eps = rng.standard_normal((Ny, Nx))
            z = sfft.ifft2(np.sqrt(lam) * sfft.fft2(eps)).real
            return z[: spec.ny, : spec.nx]
    raise EmbeddingFailure(
        "embedding not non-negative definite (min eigenvalue %g after doubling)" % last_min
    )


def _sample_dense(spec: GridSpec, cov, rng: np.random.Generator) -> np.ndarray:
    n = spec.nx * spec.ny
    xx, yy = spec.center_mesh()
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    d = np.hypot(pts[:, 0][:, None] - pts[:, 0][None, :], pts[:, 1][:, None] - pts[:, 1][None, :])
    C = cov.at_distance(d)
    C[np.diag_indices(n)] += 1e-12 * max(cov.at_distance(0.0), 1.0)
    L = np.linalg.cholesky(C)
    z = L @ rng.standard_normal(n)
    return z.reshape(spec.shape)


def sample_gaussian_field(
    spec: GridSpec, mean: MeanSurface, cov: ExpCovariance, key: SeedKey
) -> ScalarField:
    """Draw a stationary-covariance Gaussian field on the grid.

    Circulant embedding is the primary path; if the doubled (and once
    re-doubled) embedding still has substantially negative eigenvalues, a
    dense Cholesky fallback runs for grids up to DENSE_MAX_PIXELS pixels,
    otherwise EmbeddingFailure propagates.
    """
    n = spec.nx * spec.ny
    rng = key.rng()
    if n <= DENSE_MAX_PIXELS:
        try:
            z = _sample_circulant(spec, cov, rng)
        except EmbeddingFailure:
            z = _sample_dense(spec, cov, rng)
    else:
        if n > CIRCULANT_MAX_PIXELS:
            raise EmbeddingFailure("grid too large for the circulant path (%d pixels)" % n)
        z = _sample_circulant(spec, cov, rng)
    z = z + mean.on_grid(spec)
    return ScalarField(spec, z, signed=True)


def exp_transform(fld: ScalarField) -> ScalarField:
    """Pointwise exponential; turns a signed log-field into a positive mark
    field."""
    return ScalarField(fld.spec, np.exp(fld.values), signed=False)


def thinning_weights(spec: GridSpec, r1: MeanSurface) -> tuple[ScalarField, ScalarField]:
    """Complementary weight fields (r1, 1 - r1) evaluated at pixel centres.

    Raises RangeViolation when r1 leaves [0, 1] anywhere on the grid.
    """
    w1 = r1.on_grid(spec)
    if np.any(w1 < 0.0) or np.any(w1 > 1.0):
        raise RangeViolation(
            "thinning weight outside [0, 1]: range [%g, %g]" % (w1.min(), w1.max())
        )
    return ScalarField(spec, w1), ScalarField(spec, 1.0 - w1)
