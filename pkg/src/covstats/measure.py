"""Random measure pairs and coverage-reweighting.

A model realization is reduced to a MeasurePair: the two random measures
Psi_1, Psi_2 as density fields on the grid, together with their one-point
coverage/intensity functions p_1(., i).  Estimators consume the reweighted
fields Phi_i = Psi_i / p_1(., i), whose expected density is identically one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateP1, GridMismatch, TooFewReplicates
from .grid import BinaryField, GridSpec, ScalarField
from .oracles import LambdaLaw
from .randfield import MeanSurface, SeedKey

P1_MIN = 1e-12


@dataclass(frozen=True)
class CompoundSpec:
    """Compound random measure (Lambda_1 nu, Lambda_2 nu): one random pair
    of intensities modulating a fixed density nu."""

    law: LambdaLaw
    nu: MeanSurface = field(default_factory=lambda: MeanSurface("constant", value=1.0))


@dataclass
class MeasurePair:
    psi1: ScalarField
    psi2: ScalarField
    p1_1: ScalarField
    p1_2: ScalarField
    p1_source: str = "analytic"

    def __post_init__(self):
        spec = self.psi1.spec
        for other in (self.psi2, self.p1_1, self.p1_2):
            if not spec.same_geometry(other.spec):
                raise GridMismatch("measure pair components live on different grids")
        for p in (self.p1_1, self.p1_2):
            if p.values.min() < P1_MIN:
                raise DegenerateP1(
                    "coverage function minimum %g below %g" % (p.values.min(), P1_MIN)
                )

    @property
    def spec(self) -> GridSpec:
        return self.psi1.spec


def coverage_measure(x: BinaryField) -> ScalarField:
    """Density of the coverage (restriction of Lebesgue) measure of a set."""
    return ScalarField(x.spec, x.values.astype(np.float64))


def compound_measure(cspec: CompoundSpec, spec: GridSpec, key: SeedKey) -> MeasurePair:
    """Draw one compound pair on the grid; p_1 fields are analytic."""
    nu = cspec.nu.on_grid(spec)
    if nu.min() < P1_MIN:
        raise DegenerateP1("nu density minimum %g too small" % nu.min())
    l1, l2 = cspec.law.sample(key.rng(), 1)
    e1, e2 = cspec.law.means()
    return MeasurePair(
        psi1=ScalarField(spec, float(l1[0]) * nu),
        psi2=ScalarField(spec, float(l2[0]) * nu),
        p1_1=ScalarField(spec, e1 * nu),
        p1_2=ScalarField(spec, e2 * nu),
        p1_source="analytic",
    )


def random_field_measure(
    gamma1: ScalarField,
    gamma2: ScalarField,
    x1: BinaryField,
    x2: BinaryField,
    p1_1: ScalarField,
    p1_2: ScalarField,
) -> MeasurePair:
    """Mark fields restricted to random sets: Psi_i = Gamma_i 1{x in X_i}."""
    spec = gamma1.spec
    psi1 = ScalarField(spec, gamma1.values * x1.values)
    psi2 = ScalarField(spec, gamma2.values * x2.values)
    return MeasurePair(psi1, psi2, p1_1, p1_2, p1_source="analytic")


def reweight(pair: MeasurePair) -> tuple[ScalarField, ScalarField]:
    """Coverage-reweighted densities Phi_i = Psi_i / p_1(., i)."""
    spec = pair.spec
    phi1 = ScalarField(spec, pair.psi1.values / pair.p1_1.values)
    phi2 = ScalarField(spec, pair.psi2.values / pair.p1_2.values)
    return phi1, phi2


def plug_in_p1(replicates: list[ScalarField], floor: float | None = None) -> ScalarField:
    """Pixelwise replicate mean of Psi densities, floored away from zero.

    The default floor max(1e-6, 1/(10 n)) keeps reweighting by 1/p1 bounded
    at pixels the replicates never cover.
    """
    n = len(replicates)
    if n < 2:
        raise TooFewReplicates("plug-in p1 needs at least 2 replicates, got %d" % n)
    spec = replicates[0].spec
    acc = np.zeros(spec.shape)
    for rep in replicates:
        if not spec.same_geometry(rep.spec):
            raise GridMismatch("plug-in replicates live on different grids")
        acc += rep.values
    acc /= n
    if floor is None:
        floor = max(1e-6, 1.0 / (10.0 * n))
    np.maximum(acc, floor, out=acc)
    return ScalarField(spec, acc)
