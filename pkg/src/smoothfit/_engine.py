"""Internal computational core for backfitting and bandwidth search.

A ``Workspace`` memoizes, per dataset, everything that depends only on
(axis, bandwidth): grid-normalized kernel weight matrices, local moment
vectors, marginal fits, and the pairwise coupling blocks.  Bandwidth
selectors evaluate hundreds of backfits over a fixed candidate grid, so
these caches (plus warm starts) dominate the running time.

Not part of the public API.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, Grid
from .errors import (
    EmptyNeighborhoodError,
    NonConvergenceError,
    SingularMomentError,
)
from .kernels import KernelSpec
from .density import weight_matrix

DEFAULT_TOL = 1e-6
DEFAULT_MAX_SWEEPS = 200

# Ridge policy for 2x2 local moment solves: flag a determinant as
# numerically singular relative to the squared diagonal, then bump the
# diagonal by a scale-proportional amount.
_SING_RTOL = 1e-12
_RIDGE_SCALE = 1e-9


class _AxisStats:
    """Per-(axis, bandwidth) smoothing state."""

    __slots__ = ("w", "b", "p", "p1", "m11", "a0", "a1", "_inv", "_nw")

    def __init__(self, ws: "Workspace", j: int, h: float):
        xj = ws.data.x[:, j]
        try:
            w = weight_matrix(ws.kernel, h, ws.grid, xj)
        except EmptyNeighborhoodError as err:
            raise EmptyNeighborhoodError(j, err.where, f"bandwidth {h:g}") from None
        offset = xj[None, :] - ws.grid.points[:, None]
        b = w * offset
        n = ws.data.n
        self.w = w
        self.b = b
        self.p = w.sum(axis=1) / n
        self.p1 = b.sum(axis=1) / n
        self.m11 = (b * offset).sum(axis=1) / n
        self.a0 = w @ ws.data.y / n
        self.a1 = b @ ws.data.y / n
        self._inv = None
        self._nw = None

    def nw_marginal(self, ws: "Workspace", j: int) -> np.ndarray:
        if self._nw is None:
            if np.any(self.p <= 0.0):
                g = int(np.argmin(self.p))
                raise EmptyNeighborhoodError(j, float(ws.grid.points[g]))
            self._nw = self.a0 / self.p
        return self._nw

    def inverse(self, ws: "Workspace", j: int):
        """Entries (i11, i12, i22) of the ridged 2x2 moment inverse."""
        if self._inv is None:
            p, p1, m11 = self.p, self.p1, self.m11
            det = p * m11 - p1 * p1
            bad = np.abs(det) < _SING_RTOL * (p * p + m11 * m11)
            if np.any(bad):
                lam = _RIDGE_SCALE * (p + m11)
                p = np.where(bad, p + lam, p)
                m11 = np.where(bad, m11 + lam, m11)
                det = p * m11 - p1 * p1
                still = np.abs(det) <= 0.0
                if np.any(still):
                    g = int(np.argmax(still))
                    raise SingularMomentError(j, float(ws.grid.points[g]))
            self._inv = (m11 / det, -p1 / det, p / det)
        return self._inv


class Workspace:
    """Caches per-dataset smoothing state across many bandwidths."""

    def __init__(self, data: Dataset, grid: Grid, kernel: KernelSpec):
        self.data = data
        self.grid = grid
        self.kernel = kernel
        self.tau = grid.weights
        self.ybar = float(data.y.mean())
        self._axes: dict = {}
        self._pairs: dict = {}
        pos = data.x * (grid.size - 1)
        idx = np.clip(pos.astype(int), 0, grid.size - 2)
        self._idx = idx
        self._frac = pos - idx

    # -- cached primitives -------------------------------------------------

    def axis(self, j: int, h: float) -> _AxisStats:
        key = (j, float(h))
        st = self._axes.get(key)
        if st is None:
            st = self._axes[key] = _AxisStats(self, j, float(h))
        return st

    def _pair_blocks(self, a: int, b: int, ha: float, hb: float):
        """Coupling blocks for the ordered axis pair (a, b), a < b.

        Returns (wawb, bawb, wabb, babb), each of shape (G, G), where
        w/b pick the plain or offset-weighted weight matrix of the axis
        and the result is the sample average of outer products.
        """
        key = (a, b, float(ha), float(hb))
        blocks = self._pairs.get(key)
        if blocks is None:
            sa, sb = self.axis(a, ha), self.axis(b, hb)
            n = self.data.n
            blocks = (
                sa.w @ sb.w.T / n,
                sa.b @ sb.w.T / n,
                sa.w @ sb.b.T / n,
                sa.b @ sb.b.T / n,
            )
            self._pairs[key] = blocks
        return blocks

    def nw_block(self, src: int, dst: int, h_src: float, h_dst: float) -> np.ndarray:
        """Pair density block with rows on the src grid, cols on dst."""
        if src < dst:
            return self._pair_blocks(src, dst, h_src, h_dst)[0]
        return self._pair_blocks(dst, src, h_dst, h_src)[0].T

    def ll_blocks(self, src: int, dst: int, h_src: float, h_dst: float):
        """Cross-moment blocks oriented src -> dst.

        Returns (s11, s12, s21, s22) with rows on the src grid and
        columns on the dst grid: s12 carries the src offset, s21 the dst
        offset, s22 both.  These couple (level, slope) of component src
        into the two-component update of dst.
        """
        if src < dst:
            s11, s12, s21, s22 = self._pair_blocks(src, dst, h_src, h_dst)
            return s11, s12, s21, s22
        s11, s12, s21, s22 = self._pair_blocks(dst, src, h_dst, h_src)
        return s11.T, s21.T, s12.T, s22.T

    # -- evaluation at the data points --------------------------------------

    def component_at_data(self, j: int, curve: np.ndarray) -> np.ndarray:
        """Linear interpolation of a grid curve at the j-th covariate."""
        idx, frac = self._idx[:, j], self._frac[:, j]
        return curve[idx] * (1.0 - frac) + curve[idx + 1] * frac

    def fitted_at_data(self, intercept: float, comps: np.ndarray) -> np.ndarray:
        out = np.full(self.data.n, intercept)
        for j in range(self.data.d):
            out += self.component_at_data(j, comps[j])
        return out


# -- solvers ----------------------------------------------------------------


def nw_solve(
    ws: Workspace,
    h,
    init: np.ndarray | None = None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
):
    """Gauss-Seidel sweeps for the Nadaraya-Watson backfitting system.

    Returns (components, sweeps, changes) with components already
    normalized to have zero density-weighted mean per axis; the
    intercept is the response mean throughout.
    """
    d, g = ws.data.d, ws.grid.size
    axes = [ws.axis(j, h[j]) for j in range(d)]
    marg = [axes[j].nw_marginal(ws, j) for j in range(d)]
    m = np.zeros((d, g)) if init is None else np.array(init, dtype=float)
    m0 = ws.ybar
    tau = ws.tau
    changes = []
    converged = False
    for sweep in range(1, max_sweeps + 1):
        delta = 0.0
        for j in range(d):
            acc = np.zeros(g)
            for k in range(d):
                if k == j:
                    continue
                acc += (tau * m[k]) @ ws.nw_block(k, j, h[k], h[j])
            new = marg[j] - acc / axes[j].p - m0
            delta = max(delta, float(np.abs(new - m[j]).max()))
            m[j] = new
        changes.append(delta)
        if delta <= tol * max(1.0, float(np.abs(m).max())):
            converged = True
            break
    if not converged:
        raise NonConvergenceError(max_sweeps, changes[-1])
    # Zero-mean normalization against the marginal densities.  At the
    # discrete fixed point the means already sum to zero, so this leaves
    # the fitted surface (and the intercept) unchanged.
    for j in range(d):
        m[j] -= tau @ (axes[j].p * m[j])
    return m, len(changes), changes


def ll_solve(
    ws: Workspace,
    h,
    init=None,
    tol: float = DEFAULT_TOL,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
):
    """Gauss-Seidel sweeps for the local linear backfitting system.

    Iterates the coupled (level, slope) updates with the intercept
    refreshed from the norming functional at the start of every sweep.
    Returns (levels, slopes, sweeps, changes), normalized so that each
    component's norming functional vanishes and the intercept equals the
    response mean.
    """
    d, g = ws.data.d, ws.grid.size
    axes = [ws.axis(j, h[j]) for j in range(d)]
    invs = [axes[j].inverse(ws, j) for j in range(d)]
    if init is None:
        m = np.zeros((d, g))
        s = np.zeros((d, g))
    else:
        m = np.array(init[0], dtype=float)
        s = np.array(init[1], dtype=float)
    tau = ws.tau
    changes = []
    converged = False
    for sweep in range(1, max_sweeps + 1):
        m0 = ws.ybar
        for j in range(d):
            m0 -= tau @ (axes[j].p * m[j]) + tau @ (axes[j].p1 * s[j])
        delta = 0.0
        for j in range(d):
            ax = axes[j]
            c0 = np.zeros(g)
            c1 = np.zeros(g)
            for k in range(d):
                if k == j:
                    continue
                s11, s12, s21, s22 = ws.ll_blocks(k, j, h[k], h[j])
                tm, ts = tau * m[k], tau * s[k]
                c0 += tm @ s11 + ts @ s12
                c1 += tm @ s21 + ts @ s22
            r0 = ax.a0 - m0 * ax.p - c0
            r1 = ax.a1 - m0 * ax.p1 - c1
            i11, i12, i22 = invs[j]
            new_m = i11 * r0 + i12 * r1
            new_s = i12 * r0 + i22 * r1
            delta = max(
                delta,
                float(np.abs(new_m - m[j]).max()),
                float(np.abs(new_s - s[j]).max()),
            )
            m[j] = new_m
            s[j] = new_s
        changes.append(delta)
        scale = max(1.0, float(np.abs(m).max()), float(np.abs(s).max()))
        if delta <= tol * scale:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(max_sweeps, changes[-1])
    # Shift each level so its norming functional vanishes; the shifts are
    # absorbed by the intercept, which lands exactly on the response mean.
    for j in range(d):
        c = tau @ (axes[j].p * m[j]) + tau @ (axes[j].p1 * s[j])
        m[j] -= c
    return m, s, len(changes), changes
