"""Closed-form and quadrature reference values for the cross statistics.

For compound measures (Psi_1, Psi_2) = (Lambda_1 nu, Lambda_2 nu) the cross
statistics depend only on the joint law of (Lambda_1, Lambda_2):

    K_12(t) = kappa_d t^d (1 + Cov(Lambda_1, Lambda_2) / (E Lambda_1 E Lambda_2))
    J_12(t) = E[Lambda_1 e^{-s Lambda_2}] / (E Lambda_1 E[e^{-s Lambda_2}]),
              s = kappa_d t^d / E Lambda_2.

Gamma laws reduce to rational expressions in s (derivations in
docs/oracles.md); the balanced uniform law goes through 1-D adaptive
quadrature.  Boolean-model coverage probabilities are integrated exactly in
the y-direction (disc sections are intervals, the intensity is affine) with
adaptive quadrature in x.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi, sqrt

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateP1, QuadratureFailure
from .grid import lebesgue_ball
from .randfield import ExpCovariance, MeanSurface

_QUAD_OPTS = dict(epsabs=1e-11, epsrel=1e-11, limit=200)


@dataclass
class OracleCurve:
    """Reference curve with a tag describing how it was computed."""

    name: str
    ordering: str
    t: np.ndarray
    values: np.ndarray
    method: str

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.t.shape != self.values.shape:
            raise ValueError("t and values must have equal length")


@dataclass(frozen=True)
class LambdaLaw:
    """Joint law of the random pair (Lambda_1, Lambda_2).

    kind "constant":         Lambda = (c1, c2) deterministic
    kind "gamma":            Lambda_1, Lambda_2 iid gamma(shape, rate)
    kind "gamma-linked":     Lambda_1 ~ gamma(shape, rate), Lambda_2 = scale * Lambda_1
    kind "uniform-balanced": Lambda_1 ~ U(0, scale), Lambda_2 = scale - Lambda_1
    """

    kind: str
    c1: float = 1.0
    c2: float = 1.0
    shape: float = 1.0
    rate: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "gamma", "gamma-linked", "uniform-balanced"):
            raise ValueError("unknown law kind %r" % (self.kind,))
        if self.kind == "constant" and (self.c1 <= 0 or self.c2 <= 0):
            raise ValueError("constant intensities must be positive")
        if self.kind in ("gamma", "gamma-linked") and (self.shape <= 0 or self.rate <= 0):
            raise ValueError("gamma shape and rate must be positive")
        if self.kind in ("gamma-linked", "uniform-balanced") and self.scale <= 0:
            raise ValueError("scale must be positive")

    # -- basic moments ------------------------------------------------

    def means(self) -> tuple[float, float]:
        if self.kind == "constant":
            return self.c1, self.c2
        if self.kind == "gamma":
            m = self.shape / self.rate
            return m, m
        if self.kind == "gamma-linked":
            m = self.shape / self.rate
            return m, self.scale * m
        return self.scale / 2.0, self.scale / 2.0

    def cov12(self) -> float:
        if self.kind == "constant" or self.kind == "gamma":
            return 0.0
        if self.kind == "gamma-linked":
            return self.scale * self.shape / self.rate**2
        return -self.scale**2 / 12.0

    def swap(self) -> "LambdaLaw":
        """The law with the two components exchanged."""
        if self.kind == "constant":
            return LambdaLaw("constant", c1=self.c2, c2=self.c1)
        if self.kind == "gamma-linked":
            # Lambda_2 = c * Lambda_1 ~ gamma(shape, rate / c), and the old
            # first component is 1/c times the new first one.
            return LambdaLaw(
                "gamma-linked",
                shape=self.shape,
                rate=self.rate / self.scale,
                scale=1.0 / self.scale,
            )
        return self  # gamma iid and uniform-balanced are exchangeable

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        if self.kind == "constant":
            return np.full(size, self.c1), np.full(size, self.c2)
        if self.kind == "gamma":
            return (
                rng.gamma(self.shape, 1.0 / self.rate, size),
                rng.gamma(self.shape, 1.0 / self.rate, size),
            )
        if self.kind == "gamma-linked":
            l1 = rng.gamma(self.shape, 1.0 / self.rate, size)
            return l1, self.scale * l1
        l1 = rng.random(size) * self.scale
        return l1, self.scale - l1

    # -- weighted Laplace transforms of the second component ----------

    def moment_weighted2(self, k: int, s: float) -> float:
        """E[Lambda_2^k exp(-s Lambda_2)] for k in {0, 1, 2}."""
        if k not in (0, 1, 2):
            raise ValueError("k must be 0, 1 or 2")
        if self.kind == "constant":
            return self.c2**k * exp(-s * self.c2)
        if self.kind in ("gamma", "gamma-linked"):
            a = self.shape
            b = self.rate if self.kind == "gamma" else self.rate / self.scale
            base = (b / (b + s)) ** a
            if k == 0:
                return base
            if k == 1:
                return base * a / (b + s)
            return base * a * (a + 1.0) / (b + s) ** 2
        A = self.scale
        val, err = quad(lambda x: x**k * exp(-s * x) / A, 0.0, A, **_QUAD_OPTS)
        if err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureFailure("weighted moment integral did not converge")
        return val

    def laplace2(self, s: float) -> float:
        return self.moment_weighted2(0, s)

    def weighted_laplace12(self, s: float) -> float:
        """E[Lambda_1 exp(-s Lambda_2)]."""
        if self.kind == "constant":
            return self.c1 * exp(-s * self.c2)
        if self.kind == "gamma":
            return (self.shape / self.rate) * self.laplace2(s)
        if self.kind == "gamma-linked":
            return self.moment_weighted2(1, s) / self.scale
        A = self.scale
        val, err = quad(lambda x: (A - x) * exp(-s * x) / A, 0.0, A, **_QUAD_OPTS)
        if err > 1e-8 * max(1.0, abs(val)):
            raise QuadratureFailure("weighted Laplace integral did not converge")
        return val


def _s_of_t(law: LambdaLaw, t: np.ndarray, d: int) -> np.ndarray:
    e2 = law.means()[1]
    return np.array([lebesgue_ball(float(tt), d) for tt in t]) / e2


def compound_K12(law: LambdaLaw, t_values, d: int = 2, ordering: str = "12") -> OracleCurve:
    """Cross K-function of the compound pair: kappa_d t^d times the
    covariance inflation factor (symmetric in the two components)."""
    t = np.asarray(t_values, dtype=np.float64)
    e1, e2 = law.means()
    factor = 1.0 + law.cov12() / (e1 * e2)
    vals = np.array([lebesgue_ball(float(tt), d) for tt in t]) * factor
    return OracleCurve("K12", ordering, t, vals, method="closed-form")


def compound_L2(law: LambdaLaw, t_values, d: int = 2, ordering: str = "12") -> OracleCurve:
    if ordering == "21":
        law = law.swap()
    t = np.asarray(t_values, dtype=np.float64)
    vals = np.array([law.laplace2(s) for s in _s_of_t(law, t, d)])
    method = "quadrature" if law.kind == "uniform-balanced" else "closed-form"
    return OracleCurve("L2", ordering, t, vals, method=method)


def compound_L12(law: LambdaLaw, t_values, d: int = 2, ordering: str = "12") -> OracleCurve:
    if ordering == "21":
        law = law.swap()
    t = np.asarray(t_values, dtype=np.float64)
    e1 = law.means()[0]
    vals = np.array([law.weighted_laplace12(s) / e1 for s in _s_of_t(law, t, d)])
    method = "quadrature" if law.kind == "uniform-balanced" else "closed-form"
    return OracleCurve("L12", ordering, t, vals, method=method)


def compound_J12(law: LambdaLaw, t_values, d: int = 2, ordering: str = "12") -> OracleCurve:
    """Cross J-function: 1 for independent components, < 1 under positive
    association (linked laws), > 1 under negative association (balanced)."""
    if ordering == "21":
        law = law.swap()
    t = np.asarray(t_values, dtype=np.float64)
    e1 = law.means()[0]
    vals = np.array(
        [law.weighted_laplace12(s) / (e1 * law.laplace2(s)) for s in _s_of_t(law, t, d)]
    )
    method = "quadrature" if law.kind == "uniform-balanced" else "closed-form"
    return OracleCurve("J12", ordering, t, vals, method=method)


# ----------------------------------------------------------------------
# Boolean-model coverage probabilities


def _disc_section(cx: float, cy: float, r: float, zx: float):
    dx2 = r * r - (zx - cx) ** 2
    if dx2 <= 0.0:
        return None
    half = sqrt(dx2)
    return (cy - half, cy + half)


def _merge_sections(a, b):
    if a is None:
        return [] if b is None else [b]
    if b is None:
        return [a]
    if a[0] > b[0]:
        a, b = b, a
    if b[0] <= a[1]:
        return [(a[0], max(a[1], b[1]))]
    return [a, b]


def _affine_strip_integral(coef, zx: float, sections) -> float:
    a0, ax, ay = coef
    total = 0.0
    for lo, hi in sections:
        total += (a0 + ax * zx) * (hi - lo) + 0.5 * ay * (hi * hi - lo * lo)
    return total


def _integrate_discs(lam: MeanSurface, r: float, centers) -> float:
    """Integral of the affine intensity over a disc or union of two discs.

    The y-section of the region is a union of at most two intervals, over
    which the affine integrand integrates exactly; adaptive quadrature
    handles the x-direction with breakpoints at the disc extents.
    """
    coef = lam.is_affine_coefficients()
    lo = min(c[0] - r for c in centers)
    hi = max(c[0] + r for c in centers)
    breaks = sorted({c[0] - r for c in centers} | {c[0] + r for c in centers})
    inner = [b for b in breaks if lo < b < hi]

    def integrand(zx):
        if len(centers) == 1:
            sec = _disc_section(centers[0][0], centers[0][1], r, zx)
            sections = [] if sec is None else [sec]
        else:
            sections = _merge_sections(
                _disc_section(centers[0][0], centers[0][1], r, zx),
                _disc_section(centers[1][0], centers[1][1], r, zx),
            )
        return _affine_strip_integral(coef, zx, sections)

    val, err = quad(integrand, lo, hi, points=inner or None, **_QUAD_OPTS)
    if err > 1e-7 * max(1.0, abs(val)):
        raise QuadratureFailure("disc integral reached error %g" % err)
    return val


@dataclass
class BooleanPairCoverage:
    p1_x: float
    p1_y: float
    p2: float
    xi2: float


def boolean_coverage(lam: MeanSurface, r: float, x, y=None):
    """One- and two-point coverage of a Boolean model with intensity
    `lam` and deterministic disc grains of radius r.

    With one location returns p1(x); with two returns the pair coverage
    p2(x, y) together with the coverage-reweighted correlation xi2.
    """
    if r <= 0:
        raise ValueError("grain radius must be positive")
    x = (float(x[0]), float(x[1]))
    ix = _integrate_discs(lam, r, [x])
    p1x = 1.0 - exp(-ix)
    if y is None:
        return p1x
    y = (float(y[0]), float(y[1]))
    iy = _integrate_discs(lam, r, [y])
    p1y = 1.0 - exp(-iy)
    iu = _integrate_discs(lam, r, [x, y])
    p2 = p1x + p1y - 1.0 + exp(-iu)
    if p1x <= 0.0 or p1y <= 0.0:
        raise DegenerateP1("coverage probability vanishes; xi2 undefined")
    xi2 = (p2 - p1x * p1y) / (p1x * p1y)
    return BooleanPairCoverage(p1x, p1y, p2, xi2)


# ----------------------------------------------------------------------
# log-Gaussian mark fields over independent Boolean sets


def loggauss_K12(cov: ExpCovariance, t_values, cross_cov=None) -> OracleCurve:
    """Cross K-function when both components carry the same exponentiated
    Gaussian field: K_12(t) = int_0^t 2 pi rho (1 + c(rho)) exp(cov(rho)) drho,
    with c the cross-correlation of the underlying sets (zero when the sets
    are independent)."""
    t = np.asarray(t_values, dtype=np.float64)

    def integrand(rho):
        base = 1.0 if cross_cov is None else 1.0 + cross_cov(rho)
        return 2.0 * pi * rho * base * exp(float(cov.at_distance(rho)))

    vals = np.empty_like(t)
    for i, tt in enumerate(t):
        if tt == 0.0:
            vals[i] = 0.0
            continue
        v, err = quad(integrand, 0.0, float(tt), **_QUAD_OPTS)
        if err > 1e-7 * max(1.0, abs(v)):
            raise QuadratureFailure("K12 quadrature reached error %g" % err)
        vals[i] = v
    return OracleCurve("K12", "12", t, vals, method="quadrature")


# ----------------------------------------------------------------------
# independent germ-grain pair


@dataclass
class GermGrainOracle:
    p1_1: float
    p1_2: float
    k12: OracleCurve
    f2: OracleCurve
    h12: OracleCurve
    t12: OracleCurve
    j12: OracleCurve
    void_ratio: OracleCurve


def germgrain_stats(lam1: float, lam2: float, grain_r: float, t_values) -> GermGrainOracle:
    """Reference statistics for two independent Boolean models with constant
    germ intensities and disc grains of radius grain_r."""
    t = np.asarray(t_values, dtype=np.float64)
    p1 = 1.0 - exp(-lam1 * pi * grain_r**2)
    p2 = 1.0 - exp(-lam2 * pi * grain_r**2)
    f2 = 1.0 - np.exp(-lam2 * pi * (grain_r + t) ** 2)
    k12 = pi * t**2
    ones = np.ones_like(t)
    return GermGrainOracle(
        p1_1=p1,
        p1_2=p2,
        k12=OracleCurve("K12", "12", t, k12, method="closed-form"),
        f2=OracleCurve("F2", "12", t, f2, method="closed-form"),
        h12=OracleCurve("H12", "12", t, f2.copy(), method="closed-form"),
        t12=OracleCurve("T12", "12", t, p1 * f2, method="closed-form"),
        j12=OracleCurve("J12", "12", t, ones, method="closed-form"),
        void_ratio=OracleCurve("void", "12", t, ones.copy(), method="closed-form"),
    )


# ----------------------------------------------------------------------
# structural checks


def check_weighted_laplace_inequality(alpha, t_values, d: int = 2) -> np.ndarray:
    """Verify (E[a e^{-a t^d}])^2 <= E[a^2 e^{-a t^d}] E[e^{-a t^d}].

    `alpha` is either a LambdaLaw (the second component is checked, closed
    forms or quadrature) or a 1-D sample array (exact Cauchy-Schwarz on the
    empirical measure, so failures indicate a bug, not noise).
    """
    t = np.asarray(t_values, dtype=np.float64)
    out = np.empty(t.shape, dtype=bool)
    if isinstance(alpha, LambdaLaw):
        for i, tt in enumerate(t):
            s = float(tt) ** d
            m0 = alpha.moment_weighted2(0, s)
            m1 = alpha.moment_weighted2(1, s)
            m2 = alpha.moment_weighted2(2, s)
            out[i] = m1 * m1 <= m2 * m0 * (1.0 + 1e-10) + 1e-300
        return out
    a = np.asarray(alpha, dtype=np.float64)
    if a.ndim != 1 or a.size == 0 or np.any(a < 0):
        raise ValueError("sample must be a non-empty 1-D non-negative array")
    for i, tt in enumerate(t):
        w = np.exp(-a * float(tt) ** d)
        m0 = w.mean()
        m1 = (a * w).mean()
        m2 = (a * a * w).mean()
        out[i] = m1 * m1 <= m2 * m0 * (1.0 + 1e-10) + 1e-300
    return out


def j12_monotonicity(law: LambdaLaw, t_values, tol: float = 1e-9) -> tuple[str, bool]:
    """Classify the oracle J_12 curve as "non-increasing", "non-decreasing"
    or "neither"; the second element flags an (everywhere) flat curve, which
    is reported as non-increasing by convention."""
    curve = compound_J12(law, t_values)
    diffs = np.diff(curve.values)
    flat = bool(np.all(np.abs(diffs) <= tol))
    if flat:
        return "non-increasing", True
    if np.all(diffs <= tol):
        return "non-increasing", False
    if np.all(diffs >= -tol):
        return "non-decreasing", False
    return "neither", False
