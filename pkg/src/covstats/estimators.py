"""Minus-sampling estimators of the cross statistics on pixel grids.

Every estimator integrates over the eroded window W minus t, so balls never
leave the observation window and no edge correction beyond erosion is
needed.  With Phi_i = Psi_i / p_1(., i):

    L2(t)  = (1 / l(W-t)) int_{W-t} exp(-Phi_2(B(x, t))) dx
    L12(t) = (1 / l(W-t)) int_{W-t} exp(-Phi_2(B(x, t))) dPhi_1(x)
    K12(t) = (1 / l(W-t)) int_{W-t} Phi_2(B(x, t)) dPhi_1(x)
    J12(t) = L12(t) / L2(t)

The Hamilton-principle variant replaces l(W-t) by Phi_1(W-t) in the
Phi_1-weighted statistics.  Integrals are Riemann sums over pixel centres;
ball masses come from one FFT disc convolution per (field, t).
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    BinaryField,
    GridSpec,
    RegionMask,
    ScalarField,
    ball_mass_map,
    dilate_indicator,
    erode,
)
from .errors import GridMismatch, NoConditioningPixels, ZeroDenominator

J_FLOOR = 1e-8

DENOMINATORS = ("erosion-volume", "hamilton")


@dataclass
class StatCurve:
    """A statistic evaluated on an ascending t-grid; NaN marks entries that
    could not be formed (e.g. J with a vanishing denominator)."""

    name: str
    ordering: str
    t: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.t.ndim != 1 or self.t.shape != self.values.shape:
            raise ValueError("t and values must be 1-D of equal length")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("t grid must be strictly ascending")
        if np.any(self.t < 0):
            raise ValueError("t values must be non-negative")


@dataclass
class Envelope:
    """Pointwise mean and central quantile band over replicate curves."""

    name: str
    ordering: str
    t: np.ndarray
    mean: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_replicates: int
    q: float


def _check_t(t_values) -> np.ndarray:
    t = np.asarray(t_values, dtype=np.float64)
    if t.ndim != 1 or t.size == 0:
        raise ValueError("t_values must be a non-empty 1-D array")
    if np.any(t < 0) or (t.size > 1 and np.any(np.diff(t) <= 0)):
        raise ValueError("t_values must be non-negative and strictly ascending")
    return t


def _mask_cache(spec: GridSpec, t: np.ndarray) -> list[RegionMask]:
    # erode at the largest t first so an empty erosion fails fast
    erode(spec, float(t[-1]))
    return [erode(spec, float(tt)) for tt in t]


def cross_curves(
    phi1: ScalarField | None,
    phi2: ScalarField,
    t_values,
    denominator: str = "erosion-volume",
    ordering: str = "12",
) -> dict[str, StatCurve]:
    """Compute L2 (and, when phi1 is given, L12 and K12) sharing one ball
    convolution per t.  This is the workhorse behind the single-statistic
    entry points."""
    if denominator not in DENOMINATORS:
        raise ValueError("unknown denominator convention %r" % (denominator,))
    t = _check_t(t_values)
    spec = phi2.spec
    if phi1 is not None and not spec.same_geometry(phi1.spec):
        raise GridMismatch("phi1 and phi2 live on different grids")
    masks = _mask_cache(spec, t)
    l2 = np.empty(t.size)
    l12 = np.empty(t.size)
    k12 = np.empty(t.size)
    for i, tt in enumerate(t):
        inc = masks[i].included
        mass = ball_mass_map(phi2, float(tt))[inc]
        decay = np.exp(-mass)
        l2[i] = decay.mean()
        if phi1 is None:
            continue
        w = phi1.values[inc]
        if denominator == "erosion-volume":
            denom = float(inc.sum())
        else:
            denom = float(w.sum())
            if denom <= 0.0:
                raise ZeroDenominator("Phi_1 mass vanishes on W eroded by t=%g" % tt)
        l12[i] = float((decay * w).sum()) / denom
        k12[i] = float((mass * w).sum()) / denom
    meta = {"denominator": denominator}
    out = {"L2": StatCurve("L2", ordering, t, l2, dict(meta))}
    if phi1 is not None:
        out["L12"] = StatCurve("L12", ordering, t, l12, dict(meta))
        out["K12"] = StatCurve("K12", ordering, t, k12, dict(meta))
    return out


def estimate_L2(phi2: ScalarField, t_values) -> StatCurve:
    """Laplace-functional (empty-space) curve of the reweighted measure."""
    return cross_curves(None, phi2, t_values)["L2"]


def estimate_L12(
    phi1: ScalarField, phi2: ScalarField, t_values, denominator: str = "erosion-volume"
) -> StatCurve:
    """Phi_1-weighted Laplace curve; the J numerator."""
    return cross_curves(phi1, phi2, t_values, denominator)["L12"]


def estimate_K12(
    phi1: ScalarField, phi2: ScalarField, t_values, denominator: str = "erosion-volume"
) -> StatCurve:
    """Cross K-function estimator; kappa t^d under independence."""
    return cross_curves(phi1, phi2, t_values, denominator)["K12"]


def estimate_J12(l12: StatCurve, l2: StatCurve, floor: float = J_FLOOR) -> StatCurve:
    """Pointwise ratio L12 / L2 with NaN wherever L2 is at or below the
    floor (deep empty-space decay leaves nothing to divide by)."""
    if l12.t.shape != l2.t.shape or np.any(l12.t != l2.t):
        raise GridMismatch("J12 needs L12 and L2 on the same t grid")
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(l2.values > floor, l12.values / l2.values, np.nan)
    meta = dict(l12.meta)
    meta["floor"] = floor
    return StatCurve("J12", l12.ordering, l12.t, vals, meta)


def estimate_J12_rescaled(
    phi1: ScalarField, phi2: ScalarField, t_values, s: float, floor: float = J_FLOOR
) -> StatCurve:
    """J of the s-rescaled pair evaluated at radius s*t.

    Scaling the plane by s multiplies ball masses of the reweighted coverage
    measure by s^2, so J_{sX}(st) is computable on the original grid with
    exponent s^2 * Phi_2(B(x, t)); as s grows this tends to the ratio of
    conditional to unconditional void frequencies.
    """
    if s <= 0:
        raise ValueError("scale factor must be positive")
    t = _check_t(t_values)
    spec = phi2.spec
    if not spec.same_geometry(phi1.spec):
        raise GridMismatch("phi1 and phi2 live on different grids")
    masks = _mask_cache(spec, t)
    vals = np.empty(t.size)
    s2 = s * s
    for i, tt in enumerate(t):
        inc = masks[i].included
        decay = np.exp(-s2 * ball_mass_map(phi2, float(tt))[inc])
        den = decay.mean()
        num = float((decay * phi1.values[inc]).sum()) / inc.sum()
        vals[i] = num / den if den > floor else np.nan
    return StatCurve("Jscaled", "12", t, vals, {"s": s, "floor": floor})


def set_curves(
    x1: BinaryField | None, x2: BinaryField, t_values, ordering: str = "12", strict: bool = True
) -> dict[str, StatCurve]:
    """Empty-space F2 and, when x1 is given, the cross contact distribution
    H12, hitting intensity T12 and conditional/unconditional void ratio.

    strict=False turns the two t-local degeneracies (no conditioning pixel;
    no empty space left) into NaN entries instead of exceptions, so that
    replicate pipelines keep the remaining t points.
    """
    t = _check_t(t_values)
    spec = x2.spec
    if x1 is not None and not spec.same_geometry(x1.spec):
        raise GridMismatch("x1 and x2 live on different grids")
    masks = _mask_cache(spec, t)
    f2 = np.empty(t.size)
    h12 = np.empty(t.size)
    t12 = np.empty(t.size)
    void = np.empty(t.size)
    for i, tt in enumerate(t):
        inc = masks[i].included
        hit = dilate_indicator(x2, float(tt))[inc]
        f2[i] = hit.mean()
        if x1 is None:
            continue
        cond = x1.values[inc]
        n_cond = int(cond.sum())
        if n_cond == 0:
            if strict:
                raise NoConditioningPixels("no pixel of X1 in W eroded by t=%g" % tt)
            t12[i] = 0.0
            h12[i] = np.nan
            void[i] = np.nan
            continue
        t12[i] = (hit & cond).mean()
        h12[i] = t12[i] * inc.sum() / n_cond
        void_all = 1.0 - f2[i]
        if void_all <= 0.0:
            if strict:
                raise ZeroDenominator("no empty space left at t=%g" % tt)
            void[i] = np.nan
            continue
        void[i] = (1.0 - h12[i]) / void_all
    out = {"F2": StatCurve("F2", ordering, t, f2)}
    if x1 is not None:
        out["H12"] = StatCurve("H12", ordering, t, h12)
        out["T12"] = StatCurve("T12", ordering, t, t12)
        out["void"] = StatCurve("void", ordering, t, void)
    return out


def estimate_F2(x2: BinaryField, t_values) -> StatCurve:
    return set_curves(None, x2, t_values)["F2"]


def estimate_H12(x1: BinaryField, x2: BinaryField, t_values) -> StatCurve:
    return set_curves(x1, x2, t_values)["H12"]


def estimate_T12(x1: BinaryField, x2: BinaryField, t_values) -> StatCurve:
    # T12 of a realization with no X1 pixels is an honest 0, not an error
    return set_curves(x1, x2, t_values, strict=False)["T12"]


def estimate_void_ratio(x1: BinaryField, x2: BinaryField, t_values) -> StatCurve:
    return set_curves(x1, x2, t_values)["void"]


def mc_envelope(curves: list[StatCurve], q: float = 0.05) -> Envelope:
    """Pointwise replicate mean and central (1-q) band, NaN-aware."""
    if not curves:
        raise ValueError("need at least one curve")
    if not 0.0 < q < 1.0:
        raise ValueError("q must be in (0, 1)")
    first = curves[0]
    for c in curves[1:]:
        if c.name != first.name or c.ordering != first.ordering:
            raise GridMismatch("envelope mixes different statistics")
        if c.t.shape != first.t.shape or np.any(c.t != first.t):
            raise GridMismatch("envelope curves use different t grids")
    mat = np.vstack([c.values for c in curves])
    with warnings.catch_warnings():
        # t points where every replicate is NaN stay NaN, silently
        warnings.simplefilter("ignore", category=RuntimeWarning)
        mean = np.nanmean(mat, axis=0)
        lower = np.nanquantile(mat, q / 2.0, axis=0)
        upper = np.nanquantile(mat, 1.0 - q / 2.0, axis=0)
    return Envelope(first.name, first.ordering, first.t.copy(), mean, lower, upper, len(curves), q)
