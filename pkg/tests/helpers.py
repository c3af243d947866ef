"""Shared builders for the test suite."""

import numpy as np

from densgeo.density import Density
from densgeo.grid import (
    PeriodicGrid,
    ScalarField,
    VectorField,
    directional_derivative,
    integrate,
    random_band_limited,
)


def random_positive_density(grid: PeriodicGrid, rng, mass=None, wiggle=0.5):
    """Strictly positive random trigonometric density of the given mass."""
    bump = random_band_limited(grid, 6, rng)
    values = 1.0 + wiggle * bump.values / max(1.0, np.max(np.abs(bump.values)))
    field = ScalarField(grid, values)
    total = integrate(field)
    mass = grid.total_volume if mass is None else mass
    return Density(ScalarField(grid, values * (mass / total)), mass)


def peaked_density(grid: PeriodicGrid, concentration: float, center=None) -> Density:
    """Mollified bump of unit mass whose peak value is ~``concentration``.

    A periodic von-Mises profile exp(c (cos 2π(x-x0)/L - 1)); the sharpness
    c is chosen so the normalized peak height equals the concentration.
    """
    from scipy.special import i0e

    c = concentration**2 / (2.0 * np.pi)
    x = grid.coordinate(0)
    x0 = grid.lengths[0] / 2.0 if center is None else center
    profile = np.exp(c * (np.cos(2.0 * np.pi * (x - x0) / grid.lengths[0]) - 1.0))
    if grid.dim == 2:
        profile = np.broadcast_to(profile, grid.shape).copy()
    field = ScalarField(grid, profile)
    total = integrate(field)
    # extreme concentrations underflow to genuine zeros in the tails
    return Density(
        ScalarField(grid, profile * (grid.total_volume / total)),
        grid.total_volume,
        degenerate=bool(np.min(profile) == 0.0),
    )


def lie_bracket(w: VectorField, u: VectorField) -> VectorField:
    """[w, u] = (w·∇)u - (u·∇)w, componentwise."""
    comps = tuple(
        ScalarField(
            w.grid,
            directional_derivative(w, u.components[a]).values
            - directional_derivative(u, w.components[a]).values,
        )
        for a in range(w.grid.dim)
    )
    return VectorField(w.grid, comps)


def divergence_free_field(grid: PeriodicGrid, rng) -> VectorField:
    """Random divergence-free field: a constant in 1D, a curl in 2D."""
    if grid.dim == 1:
        return VectorField(
            grid, (ScalarField(grid, np.full(grid.shape, rng.standard_normal())),)
        )
    from densgeo.grid import derivative

    stream = random_band_limited(grid, 5, rng)
    return VectorField(
        grid,
        (
            derivative(stream, 1),
            ScalarField(grid, -derivative(stream, 0).values),
        ),
    )
