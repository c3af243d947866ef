"""Off-grid evaluation of periodic fields.

Two routes: exact trigonometric-interpolant evaluation (O(N) per point,
used for one-shot oracles and Newton solves) and a fast path that zero-pads
the spectrum onto a finer grid and evaluates a quintic B-spline there
(used inside time-stepping loops).
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import InversionDiverged
from .grid import PeriodicGrid


def pad_values(grid: PeriodicGrid, values: np.ndarray, factor: int) -> np.ndarray:
    """Resample onto a ``factor`` times finer grid by spectral zero-padding."""
    spec = np.fft.fftn(values)
    for axis in range(grid.dim):
        spec = _pad_axis(spec, axis, grid.shape[axis] * factor)
    fine = np.fft.ifftn(spec).real
    return fine * (factor ** grid.dim)


def _pad_axis(spec: np.ndarray, axis: int, n_fine: int) -> np.ndarray:
    spec = np.moveaxis(spec, axis, -1)
    n = spec.shape[-1]
    half = n // 2
    out = np.zeros(spec.shape[:-1] + (n_fine,), dtype=complex)
    out[..., :half] = spec[..., :half]
    out[..., n_fine - half + 1 :] = spec[..., half + 1 :]
    # split the Nyquist coefficient so the fine signal stays real
    out[..., half] = 0.5 * spec[..., half]
    out[..., n_fine - half] += 0.5 * spec[..., half]
    return np.moveaxis(out, -1, axis)


class SplineEvaluator:
    """Quintic spline on a spectrally padded grid, periodic wrap-around."""

    def __init__(self, grid: PeriodicGrid, values: np.ndarray, factor: int = 4):
        self.grid = grid
        self.factor = factor
        fine = pad_values(grid, values, factor)
        self._coeffs = ndimage.spline_filter(fine, order=5, mode="grid-wrap")
        self._spacings = tuple(h / factor for h in grid.spacings)

    def __call__(self, *points: np.ndarray) -> np.ndarray:
        """Evaluate at physical coordinates (one array per axis)."""
        coords = [
            np.asarray(p) / h for p, h in zip(points, self._spacings)
        ]
        return ndimage.map_coordinates(
            self._coeffs, coords, order=5, mode="grid-wrap", prefilter=False
        )


def trig_eval(grid: PeriodicGrid, values: np.ndarray, *points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant exactly at arbitrary points."""
    spec = np.fft.fftn(values) / values.size
    pts = [np.asarray(p, dtype=float) for p in points]
    out_shape = np.broadcast(*pts).shape if grid.dim > 1 else pts[0].shape
    flat = [np.broadcast_to(p, out_shape).ravel() for p in pts]
    if grid.dim == 1:
        phases = np.exp(1j * np.outer(flat[0], grid._k_full[0]))
        result = phases @ spec
    else:
        ex = np.exp(1j * np.outer(flat[0], grid._k_full[0]))
        ey = np.exp(1j * np.outer(flat[1], grid._k_full[1]))
        result = np.einsum("pk,kl,pl->p", ex, spec, ey)
    return result.real.reshape(out_shape)


# below this node count exact trig evaluation is cheap; above it, a padded
# spline matches the interpolant to roundoff at a fraction of the cost
EXACT_EVAL_LIMIT = 1024


def field_evaluator(grid: PeriodicGrid, values: np.ndarray, factor: int = 8):
    """Callable evaluating the trigonometric interpolant at scattered points."""
    if values.size <= EXACT_EVAL_LIMIT:
        return lambda *pts: trig_eval(grid, values, *pts)
    return SplineEvaluator(grid, values, factor=factor)


def invert_monotone(
    grid: PeriodicGrid,
    eta_values: np.ndarray,
    targets: np.ndarray,
    tol: float = 1e-15,
    max_iter: int = 60,
) -> np.ndarray:
    """Solve eta(x) = y for an increasing circle map eta(x) = x + w(x).

    Safeguarded Newton on the trigonometric interpolant of the periodic
    displacement w.  The initial guess comes from a piecewise-linear inverse
    on an 8x refined sampling, and Newton steps are clamped to one coarse
    cell so near-flat stretches of eta (small eta') cannot throw the
    iteration out of its basin.
    """
    length = grid.lengths[0]
    n = grid.shape[0]
    x_nodes = grid.coordinate(0)
    w = eta_values - x_nodes
    wprime = np.fft.ifft(np.fft.fft(w) * 1j * grid._k_deriv[0]).real
    w_at = field_evaluator(grid, w)
    wprime_at = field_evaluator(grid, wprime)

    # monotone piecewise-linear inverse on a refined grid for the first guess
    refine = 8
    x_fine = np.arange(n * refine) * (length / (n * refine))
    eta_fine = x_fine + pad_values(grid, w, refine)
    y = np.asarray(targets, dtype=float)
    # shift targets into the range [eta(0), eta(0) + L) covered by one period
    wrap = np.floor((y - eta_fine[0]) / length)
    y_wrapped = y - wrap * length
    x = np.interp(y_wrapped, np.append(eta_fine, eta_fine[0] + length),
                  np.append(x_fine, length)) + wrap * length

    max_step = length / n
    prev = np.inf
    for _ in range(max_iter):
        residual = x + w_at(x) - y
        slope = 1.0 + wprime_at(x)
        step = np.clip(residual / slope, -max_step, max_step)
        x = x - step
        worst = np.max(np.abs(step))
        if worst < tol * length or (worst < 1e-10 * length and worst >= 0.5 * prev):
            break  # converged, or stalled on the roundoff plateau
        prev = worst
    else:
        final = np.max(np.abs(x + w_at(x) - y))
        if final > 1e-9 * length:
            raise InversionDiverged(
                f"monotone inversion stalled with residual {final:.3e}"
            )
    return x
