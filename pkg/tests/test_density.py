import numpy as np
import pytest
from scipy.special import i0

from densgeo.density import (
    Density,
    density_from_values,
    normalize,
    sqrt_map,
    square_map,
    uniform_density,
)
from densgeo.errors import MassMismatch, NegativeDensity, NonPositiveInput
from densgeo.grid import (
    PeriodicGrid,
    ScalarField,
    integrate,
    l2_inner,
    random_band_limited,
)
from densgeo.hsflow import velocity_from_rho
from densgeo.spheregeo import h1dot_inner


class TestSqrtMap:
    def test_uniform(self):
        grid = PeriodicGrid(64)
        point = sqrt_map(uniform_density(grid))
        assert np.allclose(point.values, 1.0)
        assert point.radius == pytest.approx(1.0)

    def test_wavy_density_lands_on_sphere(self):
        grid = PeriodicGrid(64)
        x = grid.coordinate(0)
        d = Density(ScalarField(grid, 1 + 0.5 * np.sin(2 * np.pi * x)), 1.0)
        point = sqrt_map(d)
        norm_sq = integrate(ScalarField(grid, point.values**2))
        assert norm_sq == pytest.approx(1.0, abs=1e-12)

    def test_torus_mass_four(self):
        grid = PeriodicGrid((16, 16), (2.0, 2.0))
        point = sqrt_map(uniform_density(grid, mass=4.0))
        assert np.allclose(point.values, 1.0)
        assert point.radius == pytest.approx(2.0)

    def test_negative_rejected(self):
        grid = PeriodicGrid(64)
        x = grid.coordinate(0)
        with pytest.raises(NegativeDensity):
            density_from_values(grid, 0.1 + np.sin(2 * np.pi * x))


class TestSquareMap:
    def test_inverse_of_sqrt(self):
        grid = PeriodicGrid(64)
        from densgeo.density import SpherePoint

        point = SpherePoint(ScalarField.constant(grid, 1.0), 1.0)
        d = square_map(point)
        assert np.allclose(d.values, 1.0)
        assert not d.degenerate

    def test_great_circle_norm(self):
        # f = cos(kt)·1 + sin(kt)·g with unit g ⟂ 1 stays unit mass for all t
        grid = PeriodicGrid(64)
        from densgeo.density import SpherePoint

        g_dir = np.sqrt(2.0) * np.sin(2 * np.pi * grid.coordinate(0))
        for t in (0.3, 1.2, 2.5, 4.0):
            values = np.cos(t) + np.sin(t) * g_dir
            d = square_map(SpherePoint(ScalarField(grid, values), 1.0))
            assert d.mass == pytest.approx(1.0)
            assert integrate(d.field) == pytest.approx(1.0, abs=1e-12)

    def test_sign_change_flag(self):
        grid = PeriodicGrid(64)
        from densgeo.density import SpherePoint

        values = np.cos(2 * np.pi * grid.coordinate(0)) + 0.2
        values /= np.sqrt(integrate(ScalarField(grid, values**2)))
        d = square_map(SpherePoint(ScalarField(grid, values), 1.0))
        assert d.degenerate

    def test_roundtrip_pointwise(self):
        grid = PeriodicGrid(64)
        rng = np.random.default_rng(1)
        bump = random_band_limited(grid, 5, rng)
        values = 1.2 + bump.values / (2 * np.max(np.abs(bump.values)))
        d = density_from_values(grid, values)
        back = square_map(sqrt_map(d))
        assert np.max(np.abs(back.values - d.values)) <= 1e-14 * np.max(d.values)


class TestNormalize:
    def test_constant_rescale(self):
        grid = PeriodicGrid(64)
        d = normalize(ScalarField.constant(grid, 2.0), 1.0)
        assert np.allclose(d.values, 1.0)

    def test_already_normalized(self):
        grid = PeriodicGrid(64)
        x = grid.coordinate(0)
        values = 1 + 0.5 * np.sin(2 * np.pi * x)  # ∫ sin = 0
        d = normalize(ScalarField(grid, values), 1.0)
        assert np.allclose(d.values, values, atol=1e-14)

    def test_exponential_density(self):
        grid = PeriodicGrid(256)
        x = grid.coordinate(0)
        d = normalize(ScalarField(grid, np.exp(np.sin(2 * np.pi * x))), 1.0)
        # Bessel oracle: ∫₀¹ e^{sin 2πx} dx = I₀(1)
        expected = np.exp(np.sin(2 * np.pi * x)) / i0(1.0)
        assert np.max(np.abs(d.values - expected)) <= 1e-12

    def test_nonpositive_rejected(self):
        grid = PeriodicGrid(64)
        with pytest.raises(NonPositiveInput):
            normalize(ScalarField.constant(grid, 0.0), 1.0)

    def test_mass_mismatch_rejected(self):
        grid = PeriodicGrid(64)
        with pytest.raises(MassMismatch):
            Density(ScalarField.constant(grid, 1.0), 2.0)


class TestIsometryPullback:
    """Finite-difference pullback of the sphere metric through the square
    root matches the quarter-normalized divergence pairing."""

    def _fd_tangent(self, grid, direction, eps):
        plus = np.sqrt(1.0 + eps * direction)
        minus = np.sqrt(1.0 - eps * direction)
        return (plus - minus) / (2.0 * eps)

    def test_pullback_matches_divergence_pairing(self):
        grid = PeriodicGrid(256)
        rng = np.random.default_rng(23)
        for _ in range(5):
            a = random_band_limited(grid, 8, rng)
            b = random_band_limited(grid, 8, rng)
            u = velocity_from_rho(a)
            v = velocity_from_rho(b)
            expected = h1dot_inner(u, v)

            def pullback(eps):
                ta = self._fd_tangent(grid, a.values, eps)
                tb = self._fd_tangent(grid, b.values, eps)
                return l2_inner(ScalarField(grid, ta), ScalarField(grid, tb))

            coarse, fine = pullback(1e-4), pullback(1e-5)
            richardson = (100.0 * fine - coarse) / 99.0
            assert richardson == pytest.approx(expected, abs=1e-8)
