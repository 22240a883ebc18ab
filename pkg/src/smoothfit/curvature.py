"""Second-derivative estimation from a fitted component curve.

The estimator fits a quadratic in ``v - u`` to the curve by weighted
least squares, with kernel weights of pilot bandwidth ``g`` and the
integral discretized by the trapezoid rule on the curve's own grid, and
returns twice the quadratic coefficient.  Near the boundary the weight
window is truncated at [0, 1] and used as-is; this avoids the boundary
blow-up that plagues smoothed differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Grid
from .errors import SingularMomentError
from .kernels import BIWEIGHT, KernelSpec

__all__ = [
    "CurvatureCurve",
    "second_derivative",
    "equivalent_kernel_check",
    "pilot_bandwidth",
    "curvature_at_points",
]

_SING_RTOL = 1e-12
_RIDGE_SCALE = 1e-9


@dataclass(frozen=True)
class CurvatureCurve:
    """Estimated second derivative of a component on its grid.

    ``widened`` flags grid points where fewer than three nodes carried
    kernel weight and the window was stretched to the three nearest.
    """

    grid: Grid
    values: np.ndarray
    pilot_bandwidth: float
    widened: np.ndarray


def pilot_bandwidth(h, factor: float = 1.5, rule: str = "linear"):
    """Pilot bandwidth for curvature estimation.

    ``linear`` gives ``factor * h``; ``power`` gives ``factor * h**(5/7)``,
    a rate-motivated alternative for the pilot scale.
    """
    h = np.asarray(h, dtype=float)
    if rule == "linear":
        return factor * h
    if rule == "power":
        return factor * h ** (5.0 / 7.0)
    raise ValueError(f"unknown pilot rule {rule!r}")


def _quad_moments(grid: Grid, g: float, kernel: KernelSpec):
    """Scaled design moments for the local quadratic fit at every grid point.

    Returns (omega, delta, moments) where ``omega[a, b]`` is the
    trapezoid-weighted kernel weight node ``b`` gets in the fit at node
    ``a``, ``delta`` the (node - center)/g offsets, and ``moments`` the
    stacked 3x3 normal matrices in the g-scaled basis (1, t, t^2).
    """
    if g <= 0:
        raise ValueError("pilot bandwidth must be positive")
    pts = grid.points
    delta = (pts[None, :] - pts[:, None]) / g
    omega = kernel.fn(delta) * grid.weights[None, :]
    s = [np.sum(omega * delta**k, axis=1) for k in range(5)]
    mom = np.empty((pts.size, 3, 3))
    for r in range(3):
        for c in range(3):
            mom[:, r, c] = s[r + c]
    return omega, delta, mom


def _solve_quadratic(mom: np.ndarray, rhs: np.ndarray, grid: Grid):
    """Batched ridged solve of the 3x3 normal systems."""
    det = np.linalg.det(mom)
    diag = np.einsum("gii->gi", mom)
    bad = np.abs(det) < _SING_RTOL * np.power(np.sum(diag * diag, axis=1), 1.5)
    if np.any(bad):
        lam = _RIDGE_SCALE * diag.sum(axis=1)
        mom = mom.copy()
        for k in range(3):
            mom[bad, k, k] += lam[bad]
        det = np.linalg.det(mom)
        if np.any(np.abs(det) <= 0.0):
            g = int(np.argmax(np.abs(det) <= 0.0))
            raise SingularMomentError(None, float(grid.points[g]))
    return np.linalg.solve(mom, rhs[..., None])[..., 0]


def second_derivative(
    curve: np.ndarray,
    grid: Grid,
    g: float,
    kernel: KernelSpec = BIWEIGHT,
) -> CurvatureCurve:
    """Estimate the second derivative of a grid curve by local quadratics.

    At every grid point a quadratic in the offset is fit to the whole
    curve with kernel weights of bandwidth ``g`` (trapezoid-discretized,
    truncated at the interval ends), and twice the quadratic coefficient
    is returned.  Exact for curves that are polynomials of degree at
    most two wherever at least three nodes carry weight.

    Windows covering fewer than three grid nodes are widened to the
    three nearest nodes and flagged in ``widened``.
    """
    curve = np.asarray(curve, dtype=float).ravel()
    if curve.size != grid.size:
        raise ValueError("curve and grid sizes disagree")
    omega, delta, mom = _quad_moments(grid, g, kernel)
    scale = np.full(grid.size, g)
    # Nodes with vanishing relative weight cannot stabilize the fit.
    active = omega > omega.max(axis=1, keepdims=True) * 1e-9
    widened = active.sum(axis=1) < 3
    if np.any(widened):
        pts = grid.points
        for a in np.nonzero(widened)[0]:
            # Stretch the window so the third-nearest node carries real
            # weight (compact kernels vanish at the support edge).
            dist = np.sort(np.abs(pts - pts[a]))
            g_eff = dist[2] * 1.5
            d_row = (pts - pts[a]) / g_eff
            w_row = kernel.fn(d_row) * grid.weights
            omega[a] = w_row
            delta[a] = d_row
            scale[a] = g_eff
            for r in range(3):
                for c in range(3):
                    mom[a, r, c] = np.sum(w_row * d_row ** (r + c))
    rhs = np.stack(
        [np.sum(omega * delta**k * curve[None, :], axis=1) for k in range(3)],
        axis=1,
    )
    beta = _solve_quadratic(mom, rhs, grid)
    return CurvatureCurve(
        grid=grid,
        values=2.0 * beta[:, 2] / (scale * scale),
        pilot_bandwidth=g,
        widened=widened,
    )


def equivalent_kernel_check(
    kernel: KernelSpec, g: float, u: float, grid: Grid | None = None
) -> dict:
    """Moments of the effective weights the local quadratic fit applies.

    For an interior center ``u`` (at least ``g`` from both edges) the
    curvature coefficient is a linear functional of the curve whose
    effective weights must annihilate constants and linear trends and
    assign unit mass to the scaled squared offset: the returned moments
    ``(i0, i1, i2)`` equal ``(0, 0, 1)`` up to rounding.

    Raises
    ------
    ValueError
        If ``u`` is within ``g`` of a boundary, where the truncated
        window changes the moments by construction.
    """
    if grid is None:
        grid = Grid.regular(25)
    if not g < u < 1.0 - g:
        raise ValueError(f"center {u} is within one pilot bandwidth of a boundary")
    pts = grid.points
    delta = (pts - u) / g
    omega = kernel.fn(delta) * grid.weights
    mom = np.array(
        [[np.sum(omega * delta ** (r + c)) for c in range(3)] for r in range(3)]
    )
    # Effective weights of the quadratic coefficient.
    eff = np.linalg.solve(mom, np.eye(3))[2] @ (
        np.stack([np.ones_like(delta), delta, delta**2]) * omega
    )
    return {
        "i0": float(eff.sum()),
        "i1": float(eff @ delta),
        "i2": float(eff @ delta**2),
    }


def curvature_at_points(curve: CurvatureCurve, x) -> np.ndarray:
    """Linear interpolation of a curvature curve at arbitrary points."""
    return np.interp(np.asarray(x, dtype=float), curve.grid.points, curve.values)
