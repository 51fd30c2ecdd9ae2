"""Square-root velocity transforms and the warp group on [0, 1].

The transform sends a multichannel curve f to q = f' / sqrt(||f'||) (with
||.|| the Euclidean norm across channels), under which time warping acts by
(q o gamma) * sqrt(gamma') and the warp-invariant metric becomes plain L2.
For a single channel this reduces to q = sign(f') * sqrt(|f'|). Warps are
stored as samples on the curve grid with piecewise-linear semantics; their
square-root derivatives psi = sqrt(gamma') live on the unit sphere of L2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curves import Curve
from .errors import GridMismatch, NegativePsi, NonMonotoneWarp, NonMonotoneWarpWarning

DERIVATIVE_TOL = 1e-9


@dataclass(frozen=True)
class SrvfCurve:
    """Square-root velocity samples on the same grid contract as Curve."""

    grid: np.ndarray
    values: np.ndarray
    channels: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Warp:
    """Sampled diffeomorphism of [0, 1]: strictly increasing, endpoints pinned."""

    grid: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))

    def is_valid(self) -> bool:
        g = self.gamma
        return bool(
            g.ndim == 1
            and g.size == self.grid.size
            and abs(g[0]) <= 1e-12
            and abs(g[-1] - 1.0) <= 1e-12
            and np.all(np.diff(g) > 0)
            and g.min() >= -1e-12
            and g.max() <= 1.0 + 1e-12
        )

    def require_valid(self) -> "Warp":
        if not self.is_valid():
            raise NonMonotoneWarp("warp samples are not a strictly increasing map of [0, 1]")
        return self


@dataclass(frozen=True)
class WarpSphericalRep:
    """psi = sqrt(gamma') with unit L2 norm under trapezoid quadrature."""

    grid: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "psi", np.asarray(self.psi, dtype=float))


def identity_warp(grid: np.ndarray) -> Warp:
    grid = np.asarray(grid, dtype=float)
    return Warp(grid=grid, gamma=grid.copy())


def _derivative(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Central differences, second-order one-sided at the endpoints."""
    return np.gradient(values, grid, axis=-1, edge_order=2)


def l2_inner(u: np.ndarray, v: np.ndarray, grid: np.ndarray) -> float:
    """Trapezoid inner product over [0, 1]; channels summed when 2-d."""
    prod = np.atleast_2d(u * v).sum(axis=0)
    return float(np.trapezoid(prod, grid))


def l2_norm(u: np.ndarray, grid: np.ndarray) -> float:
    return float(np.sqrt(max(l2_inner(u, u, grid), 0.0)))


def srvf_distance(q1: SrvfCurve, q2: SrvfCurve) -> float:
    if q1.grid.size != q2.grid.size or np.max(np.abs(q1.grid - q2.grid)) > 1e-12:
        raise GridMismatch("SRVF curves live on different grids")
    return l2_norm(q1.values - q2.values, q1.grid)


def to_srvf(curve: Curve, derivative_tol: float = DERIVATIVE_TOL) -> SrvfCurve:
    """Transform a curve to its square-root velocity representation.

    Uses the joint multichannel form q = f' / sqrt(||f'||), with q = 0
    wherever ||f'|| falls below ``derivative_tol``. For one channel this is
    the signed square root of the derivative.
    """
    deriv = _derivative(curve.values, curve.grid)
    norms = np.linalg.norm(deriv, axis=0)
    scale = np.zeros_like(norms)
    ok = norms >= derivative_tol
    scale[ok] = 1.0 / np.sqrt(norms[ok])
    return SrvfCurve(grid=curve.grid, values=deriv * scale, channels=curve.channels)


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid along the last axis, starting at 0."""
    dx = np.diff(x)
    avg = 0.5 * (y[..., 1:] + y[..., :-1]) * dx
    out = np.zeros_like(y)
    out[..., 1:] = np.cumsum(avg, axis=-1)
    return out


def from_srvf(
    q: SrvfCurve,
    f0: np.ndarray | float,
    trial_id: str = "reconstructed",
    subject_id: str = "reconstructed",
) -> Curve:
    """Invert the transform: f(t) = f0 + integral of q * ||q||."""
    norms = np.linalg.norm(q.values, axis=0)
    f = _cumtrapz(q.values * norms, q.grid)
    f0 = np.broadcast_to(np.asarray(f0, dtype=float).reshape(-1), (q.n_channels,))
    channels = q.channels if q.channels else tuple(f"ch{i}" for i in range(q.n_channels))
    return Curve(
        trial_id=trial_id,
        subject_id=subject_id,
        channels=channels,
        grid=q.grid,
        values=f + f0[:, None],
    )


def warp_curve(curve: Curve, warp: Warp) -> Curve:
    """Compose a curve with a warp: (f o gamma) sampled on the grid."""
    warp.require_valid()
    values = np.vstack([np.interp(warp.gamma, curve.grid, row) for row in curve.values])
    return Curve(
        trial_id=curve.trial_id,
        subject_id=curve.subject_id,
        channels=curve.channels,
        grid=curve.grid,
        values=values,
    )


def warp_action(q: SrvfCurve, warp: Warp) -> SrvfCurve:
    """Group action on SRVFs: (q o gamma) * sqrt(gamma')."""
    if q.grid.size != warp.grid.size or np.max(np.abs(q.grid - warp.grid)) > 1e-12:
        raise GridMismatch("SRVF and warp live on different grids")
    warp.require_valid()
    dgamma = np.maximum(_derivative(warp.gamma, warp.grid), 0.0)
    comp = np.vstack([np.interp(warp.gamma, q.grid, row) for row in q.values])
    return SrvfCurve(grid=q.grid, values=comp * np.sqrt(dgamma), channels=q.channels)


def warp_compose(w1: Warp, w2: Warp) -> Warp:
    """(w1 o w2)(t) = w1(w2(t)), by linear interpolation."""
    w1.require_valid()
    w2.require_valid()
    gamma = np.interp(w2.gamma, w1.grid, w1.gamma)
    gamma[0], gamma[-1] = 0.0, 1.0
    return Warp(grid=w1.grid, gamma=gamma)


def warp_invert(w: Warp) -> Warp:
    """Sampled inverse function of a warp."""
    w.require_valid()
    gamma = np.interp(w.grid, w.gamma, w.grid)
    gamma[0], gamma[-1] = 0.0, 1.0
    return Warp(grid=w.grid, gamma=gamma)


def warp_to_sphere(w: Warp) -> WarpSphericalRep:
    """psi = sqrt(gamma'), renormalized to unit L2 norm after discretization."""
    w.require_valid()
    psi = np.sqrt(np.maximum(_derivative(w.gamma, w.grid), 0.0))
    nrm = l2_norm(psi, w.grid)
    return WarpSphericalRep(grid=w.grid, psi=psi / nrm)


def sphere_to_warp(rep: WarpSphericalRep) -> Warp:
    """gamma(t) = integral of psi^2, rescaled so gamma(1) = 1.

    A non-monotone result is returned with a NonMonotoneWarpWarning rather
    than silently repaired.
    """
    psi = rep.psi
    if np.min(psi) < -1e-12:
        raise NegativePsi(f"psi has negative entries (min {np.min(psi):.3e})")
    psi = np.maximum(psi, 0.0)
    gamma = _cumtrapz(psi * psi, rep.grid)
    if gamma[-1] <= 0:
        raise NegativePsi("psi is identically zero; no warp can be reconstructed")
    gamma = gamma / gamma[-1]
    gamma[0], gamma[-1] = 0.0, 1.0
    warp = Warp(grid=rep.grid, gamma=gamma)
    if not warp.is_valid():
        warnings.warn(
            "reconstructed warp is not strictly increasing", NonMonotoneWarpWarning
        )
    return warp


def sphere_distance(a: WarpSphericalRep, b: WarpSphericalRep) -> float:
    """Geodesic (arc) distance between unit-norm psi representations."""
    c = np.clip(l2_inner(a.psi, b.psi, a.grid), -1.0, 1.0)
    return float(np.arccos(c))


def warp_karcher_mean(warps: list[Warp], tol: float = 1e-10, max_iters: int = 100) -> Warp:
    """Karcher mean of warps computed on the psi sphere.

    Iterates the usual log/exp averaging; the warps of interest sit in the
    positive orthant where the mean is unique.
    """
    if not warps:
        raise ValueError("need at least one warp")
    grid = warps[0].grid
    psis = np.vstack([warp_to_sphere(w).psi for w in warps])
    mu = psis.mean(axis=0)
    mu = mu / l2_norm(mu, grid)
    for _ in range(max_iters):
        inner = np.clip(np.trapezoid(psis * mu, grid, axis=1), -1.0, 1.0)
        theta = np.arccos(inner)
        fac = np.where(theta > 1e-14, theta / np.sin(np.maximum(theta, 1e-14)), 1.0)
        logs = fac[:, None] * (psis - inner[:, None] * mu)
        v = logs.mean(axis=0)
        vnorm = l2_norm(v, grid)
        if vnorm < tol:
            break
        mu = np.cos(vnorm) * mu + np.sin(vnorm) * (v / vnorm)
        mu = mu / l2_norm(mu, grid)
    return sphere_to_warp(WarpSphericalRep(grid=grid, psi=np.maximum(mu, 0.0)))
