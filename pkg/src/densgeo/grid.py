"""Uniform periodic grids on the circle and flat torus with spectral calculus.

Nodes are x_j = j * L / N per axis, so quadrature is the rectangle rule,
which is spectrally exact for periodic integrands.  Differentiation is done
with the FFT; the Nyquist mode is zeroed on differentiation so derivatives
of real fields stay real.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, NonZeroMean


def _as_tuple(value, dim: int) -> tuple:
    if np.isscalar(value):
        return (value,) * dim
    value = tuple(value)
    if len(value) != dim:
        raise ValueError(f"expected {dim} per-axis values, got {len(value)}")
    return value


class PeriodicGrid:
    """Uniform discretization of S^1 (dim 1) or a flat torus (dim 2).

    Parameters
    ----------
    points_per_axis : int or tuple of int
        Nodes per axis; each must be even and at least 8.
    lengths : float or tuple of float
        Period per axis (default 1.0).
    """

    def __init__(self, points_per_axis, lengths=1.0):
        if np.isscalar(points_per_axis):
            points_per_axis = (int(points_per_axis),)
        self.shape = tuple(int(n) for n in points_per_axis)
        self.dim = len(self.shape)
        if self.dim not in (1, 2):
            raise ValueError("only the circle (dim 1) and torus (dim 2) are supported")
        for n in self.shape:
            if n < 8 or n % 2 != 0:
                raise ValueError("points_per_axis must be even and >= 8")
        self.lengths = tuple(float(L) for L in _as_tuple(lengths, self.dim))
        if min(self.lengths) <= 0:
            raise ValueError("lengths must be positive")
        self.spacings = tuple(L / n for L, n in zip(self.lengths, self.shape))
        self.total_volume = float(np.prod(self.lengths))
        # quadrature weight per node (uniform rectangle rule)
        self.node_weight = float(np.prod(self.spacings))
        self.node_count = int(np.prod(self.shape))

        self._axes = tuple(
            np.arange(n) * h for n, h in zip(self.shape, self.spacings)
        )
        self._coords = np.meshgrid(*self._axes, indexing="ij")

        # wavenumbers: full set for the Laplacian, Nyquist-zeroed for first
        # derivatives (odd at the Nyquist frequency for even N)
        self._k_full = tuple(
            2.0 * np.pi * np.fft.fftfreq(n, d=h)
            for n, h in zip(self.shape, self.spacings)
        )
        self._k_deriv = []
        for k, n in zip(self._k_full, self.shape):
            kd = k.copy()
            kd[n // 2] = 0.0
            self._k_deriv.append(kd)
        self._k_deriv = tuple(self._k_deriv)

        k2 = np.zeros(self.shape)
        for axis, k in enumerate(self._k_full):
            k2 = k2 + self._broadcast(k, axis) ** 2
        self._k2 = k2

        # 2/3-rule mask for dealiased products
        mask = np.ones(self.shape, dtype=bool)
        for axis, (k, n, h) in enumerate(zip(self._k_full, self.shape, self.spacings)):
            kcut = (2.0 / 3.0) * np.pi / h  # 2/3 of the Nyquist wavenumber
            mask &= self._broadcast(np.abs(k) <= kcut + 1e-12, axis)
        self._dealias_mask = mask

    def _broadcast(self, values_1d: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = self.shape[axis]
        return values_1d.reshape(shape)

    def axis_nodes(self, axis: int = 0) -> np.ndarray:
        """Node coordinates along one axis."""
        return self._axes[axis]

    def coordinate(self, axis: int = 0) -> np.ndarray:
        """Full-shape array of node coordinates along ``axis``."""
        return self._coords[axis]

    def compatible(self, other: "PeriodicGrid") -> bool:
        return self.shape == other.shape and self.lengths == other.lengths

    def check_compatible(self, other: "PeriodicGrid") -> None:
        if not self.compatible(other):
            raise GridMismatch(
                f"grids differ: {self.shape}/{self.lengths} vs {other.shape}/{other.lengths}"
            )

    def __repr__(self):
        return f"PeriodicGrid(shape={self.shape}, lengths={self.lengths})"


@dataclass(frozen=True)
class ScalarField:
    """Real scalar field sampled at the grid nodes."""

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid {self.grid.shape}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, fn) -> "ScalarField":
        """Sample ``fn(x)`` (1D) or ``fn(x, y)`` (2D) at the nodes."""
        values = fn(*[grid.coordinate(a) for a in range(grid.dim)])
        return cls(grid, np.broadcast_to(values, grid.shape).copy())

    @classmethod
    def constant(cls, grid: PeriodicGrid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))


@dataclass(frozen=True)
class VectorField:
    """Vector field with one scalar component per axis."""

    grid: PeriodicGrid
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) != self.grid.dim:
            raise ValueError("one component per axis required")
        for c in comps:
            self.grid.check_compatible(c.grid)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_arrays(cls, grid: PeriodicGrid, *arrays) -> "VectorField":
        return cls(grid, tuple(ScalarField(grid, a) for a in arrays))


def integrate(field: ScalarField) -> float:
    """Quadrature of the field against the reference volume form."""
    return float(field.grid.node_weight * np.sum(field.values))


def mean(field: ScalarField) -> float:
    return integrate(field) / field.grid.total_volume


def l2_inner(f: ScalarField, g: ScalarField) -> float:
    """L^2 pairing ∫ f g dμ."""
    f.grid.check_compatible(g.grid)
    return float(f.grid.node_weight * np.sum(f.values * g.values))


def _deriv_values(grid: PeriodicGrid, values: np.ndarray, axis: int) -> np.ndarray:
    spectrum = np.fft.fftn(values)
    spectrum *= 1j * grid._broadcast(grid._k_deriv[axis], axis)
    return np.fft.ifftn(spectrum).real


def derivative(field: ScalarField, axis: int = 0) -> ScalarField:
    """Spectral partial derivative along one axis."""
    return ScalarField(field.grid, _deriv_values(field.grid, field.values, axis))


def gradient(field: ScalarField) -> VectorField:
    grid = field.grid
    comps = tuple(
        ScalarField(grid, _deriv_values(grid, field.values, axis))
        for axis in range(grid.dim)
    )
    return VectorField(grid, comps)


def divergence(v: VectorField) -> ScalarField:
    grid = v.grid
    out = np.zeros(grid.shape)
    for axis, comp in enumerate(v.components):
        out += _deriv_values(grid, comp.values, axis)
    return ScalarField(grid, out)


def laplacian(field: ScalarField) -> ScalarField:
    grid = field.grid
    spectrum = np.fft.fftn(field.values) * (-grid._k2)
    return ScalarField(grid, np.fft.ifftn(spectrum).real)


def laplacian_inverse(field: ScalarField) -> ScalarField:
    """Zero-mean solution f of Δf = input; the input must have zero mean."""
    grid = field.grid
    sup = np.max(np.abs(field.values))
    if abs(mean(field)) > 1e-10 * max(sup, 1e-300):
        raise NonZeroMean("laplacian_inverse requires a mean-zero input")
    spectrum = np.fft.fftn(field.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        spectrum = np.where(grid._k2 > 0, spectrum / (-grid._k2), 0.0)
    return ScalarField(grid, np.fft.ifftn(spectrum).real)


def directional_derivative(v: VectorField, f: ScalarField) -> ScalarField:
    """Advection term (v · ∇) f."""
    v.grid.check_compatible(f.grid)
    out = np.zeros(v.grid.shape)
    for axis, comp in enumerate(v.components):
        out += comp.values * _deriv_values(f.grid, f.values, axis)
    return ScalarField(f.grid, out)


def dealias(field: ScalarField) -> ScalarField:
    """Truncate to the 2/3-rule wavenumber ball (for quadratic products)."""
    spectrum = np.fft.fftn(field.values)
    spectrum[~field.grid._dealias_mask] = 0.0
    return ScalarField(field.grid, np.fft.ifftn(spectrum).real)


def dealiased_product(f: ScalarField, g: ScalarField) -> ScalarField:
    return dealias(ScalarField(f.grid, f.values * g.values))


def random_band_limited(
    grid: PeriodicGrid, max_degree: int, rng: np.random.Generator, mean_zero: bool = True
) -> ScalarField:
    """Random real trigonometric polynomial of per-axis degree <= max_degree.

    Coefficients are drawn standard normal and damped by 1/(1+|k|) so sup
    norms stay O(1) across degrees.
    """
    if max_degree >= min(grid.shape) // 2:
        raise ValueError("max_degree must be below the Nyquist frequency")
    values = np.zeros(grid.shape)
    if grid.dim == 1:
        x = grid.coordinate(0)
        for k in range(0 if not mean_zero else 1, max_degree + 1):
            a, b = rng.standard_normal(2) / (1.0 + k)
            w = 2.0 * np.pi * k / grid.lengths[0]
            if k == 0:
                values += a
            else:
                values += a * np.cos(w * x) + b * np.sin(w * x)
    else:
        x, y = grid.coordinate(0), grid.coordinate(1)
        for kx in range(0, max_degree + 1):
            for ky in range(-max_degree, max_degree + 1):
                if kx == 0 and ky < 0:
                    continue  # conjugate pair already counted
                if kx == 0 and ky == 0:
                    if mean_zero:
                        continue
                    values += rng.standard_normal()
                    continue
                a, b = rng.standard_normal(2) / (1.0 + np.hypot(kx, ky))
                phase = (
                    2.0 * np.pi * kx / grid.lengths[0] * x
                    + 2.0 * np.pi * ky / grid.lengths[1] * y
                )
                values += a * np.cos(phase) + b * np.sin(phase)
    return ScalarField(grid, values)
