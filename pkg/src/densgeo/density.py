"""Densities of fixed total mass and their square-root images on the sphere.

A density is the Radon-Nikodym derivative of a measure with respect to the
reference volume form, sampled on the grid.  Its pointwise square root lies
on the sphere of radius sqrt(mass) in L^2; under the convention
mass = total grid volume the radius is sqrt(mu(M)) and the uniform density
maps to the constant function 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import MassMismatch, NegativeDensity, NonPositiveInput
from .grid import PeriodicGrid, ScalarField, integrate

# values within this band of zero are treated as exact zeros
POSITIVITY_TOL = 1e-12


@dataclass(frozen=True)
class Density:
    """Non-negative field integrating to ``mass``.

    ``degenerate`` marks densities that arose by squaring a sign-changing
    sphere point (the continuation of a flow past blowup); such densities
    have genuine zeros.
    """

    field: ScalarField
    mass: float
    degenerate: bool = False

    def __post_init__(self):
        values = self.field.values
        if np.min(values) < -POSITIVITY_TOL * max(1.0, np.max(np.abs(values))):
            raise NegativeDensity("density values must be non-negative")
        total = integrate(self.field)
        if abs(total - self.mass) > 1e-10 * abs(self.mass):
            raise MassMismatch(
                f"density integrates to {total!r}, expected mass {self.mass!r}"
            )

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


@dataclass(frozen=True)
class SpherePoint:
    """Square root of a density: a point on the radius-r sphere in L^2."""

    field: ScalarField
    radius: float

    def __post_init__(self):
        norm_sq = integrate(ScalarField(self.field.grid, self.field.values**2))
        if abs(norm_sq - self.radius**2) > 1e-10 * self.radius**2:
            raise ValueError(
                f"sphere constraint violated: |f|^2 = {norm_sq!r}, r^2 = {self.radius**2!r}"
            )

    @property
    def grid(self) -> PeriodicGrid:
        return self.field.grid

    @property
    def values(self) -> np.ndarray:
        return self.field.values


def uniform_density(grid: PeriodicGrid, mass: float | None = None) -> Density:
    """Constant density; by default of mass mu(M), i.e. the value 1."""
    if mass is None:
        mass = grid.total_volume
    value = mass / grid.total_volume
    return Density(ScalarField.constant(grid, value), float(mass))


def sqrt_map(d: Density) -> SpherePoint:
    """Pointwise square root, landing on the sphere of radius sqrt(mass)."""
    values = d.values
    if np.min(values) < -POSITIVITY_TOL:
        raise NegativeDensity("cannot take the square root of a negative density")
    values = np.where(values < 0.0, 0.0, values)
    return SpherePoint(ScalarField(d.grid, np.sqrt(values)), float(np.sqrt(d.mass)))


def square_map(p: SpherePoint) -> Density:
    """Pointwise square; flags the result degenerate if f changes sign."""
    values = p.values
    sign_change = bool(np.min(values) < 0.0 < np.max(values))
    return Density(
        ScalarField(p.grid, values**2), p.radius**2, degenerate=sign_change
    )


def normalize(field: ScalarField, mass: float) -> Density:
    """Rescale a strictly positive field to integrate to ``mass``."""
    if np.min(field.values) <= 0.0:
        raise NonPositiveInput("normalize requires a strictly positive field")
    total = integrate(field)
    scale = mass / total
    return Density(ScalarField(field.grid, field.values * scale), float(mass))


def density_from_values(grid: PeriodicGrid, values: np.ndarray) -> Density:
    """Wrap non-negative samples as a Density with their quadrature mass."""
    f = ScalarField(grid, values)
    return Density(f, integrate(f))
