"""Modes of variation: amplitude PCA and phase principal nested spheres.

Amplitude modes are ordinary PCA of the aligned curves, one channel at a
time. Phase modes decompose the warps' unit-norm psi representations on the
sphere by backward great-subsphere fitting: at each level the best great
subsphere (radius pi/2) is found, signed geodesic residuals are recorded,
and the points are projected and rotated down one dimension until a circle
remains, whose Frechet mean is the pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .curves import Curve
from .errors import ChannelNotFound, IndexOutOfRange, SizeMismatch
from .srvf import Warp, WarpSphericalRep, sphere_to_warp, warp_curve, warp_invert, warp_to_sphere
from .tables import FeatureMatrix


@dataclass
class PcaDecomposition:
    """Mean, orthonormal components, scores, and per-component variance."""

    mean_curve: np.ndarray
    components: np.ndarray
    scores: np.ndarray
    explained_variance: np.ndarray
    channel: str
    grid: np.ndarray
    clamped: bool = False

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


def amplitude_pca(aligned, channel: str, num_components: int) -> PcaDecomposition:
    """PCA of one channel across a collection of aligned curves.

    Components are the right singular vectors of the centered data matrix,
    sign-fixed so each component's largest-magnitude entry is positive.
    num_components is clamped (and flagged) at the numerical rank.
    """
    if not aligned:
        raise ValueError("need a nonempty aligned collection")
    if num_components < 1:
        raise ValueError("num_components must be positive")
    try:
        rows = np.vstack([c.channel(channel) for c in aligned])
    except ChannelNotFound:
        raise
    n, t = rows.shape
    mean = rows.mean(axis=0)
    centered = rows - mean
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    if s.size and s[0] > 0:
        rank = int(np.sum(s > max(n, t) * np.finfo(float).eps * s[0]))
    else:
        rank = 0
    k = min(num_components, rank)
    clamped = num_components > rank
    components = vt[:k].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    scores = centered @ components.T
    variance = (s[:k] ** 2) / (n - 1) if n > 1 else np.zeros(k)
    return PcaDecomposition(
        mean_curve=mean,
        components=components,
        scores=scores,
        explained_variance=variance,
        channel=channel,
        grid=aligned[0].grid,
        clamped=clamped,
    )


def pca_reconstruct(decomp: PcaDecomposition) -> np.ndarray:
    """Rebuild the input rows from mean + scores--components."""
    return decomp.mean_curve + decomp.scores @ decomp.components


# ---------------------------------------------------------------------------
# Principal nested spheres (great-sphere mode)
# ---------------------------------------------------------------------------


@dataclass
class PnsDecomposition:
    """Backward nested-sphere decomposition of points on a unit sphere.

    signed_residuals columns are ordered by depth: column 0 is the circle
    level (the analogue of PC1), column k the k-th subsphere fit counting
    back up. Residuals are geodesically centered; the removed per-level
    means live in residual_offsets and are reapplied on reconstruction.
    """

    subsphere_axes: list[np.ndarray]
    subsphere_radii: np.ndarray
    signed_residuals: np.ndarray
    residual_offsets: np.ndarray
    pole: np.ndarray
    num_levels: int
    degenerate: bool = False
    basis: np.ndarray | None = None
    circle_mean_angle: float = 0.0
    all_offsets: np.ndarray = field(default_factory=lambda: np.zeros(0))
    grid: np.ndarray | None = None
    embed_weights: np.ndarray | None = None

    @property
    def n_points(self) -> int:
        return self.signed_residuals.shape[0]


def _rotation_to_last_axis(axis: np.ndarray) -> np.ndarray:
    """Rotation R with R @ axis = e_d (axis canonicalized to axis[-1] >= 0)."""
    d = axis.size
    e = np.zeros(d)
    e[-1] = 1.0
    c = float(axis @ e)
    if c >= 1.0 - 1e-14:
        return np.eye(d)
    v = axis + e
    return np.eye(d) - np.outer(v, v) / (1.0 + c) + 2.0 * np.outer(e, axis)


def _canonical_axis(axis: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(axis) > 1e-14)
    anchor = axis[-1] if abs(axis[-1]) > 1e-14 else (axis[nz[0]] if nz.size else 1.0)
    return -axis if anchor < 0 else axis


def fit_great_subsphere(
    points: np.ndarray, rng: np.random.Generator | None = None, restarts: int = 10
) -> np.ndarray:
    """Axis of the great subsphere minimizing squared geodesic residuals.

    Solves min_a sum arcsin(<a, x_i>)^2 by nonlinear least squares with the
    axis parameterized in ambient coordinates and renormalized; initialized
    from the smallest principal direction of the point cloud, with random
    restarts against local minima.
    """
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    if rng is None:
        rng = np.random.default_rng(0)

    clip = 1.0 - 1e-12

    def residuals(v):
        nv = np.linalg.norm(v)
        c = np.clip(points @ (v / nv), -clip, clip)
        return np.arcsin(c)

    def jacobian(v):
        nv = np.linalg.norm(v)
        u = v / nv
        c = np.clip(points @ u, -clip, clip)
        dasin = 1.0 / np.sqrt(1.0 - c**2)
        return (dasin[:, None] * (points - np.outer(c, u))) / nv

    _, _, vt = np.linalg.svd(points, full_matrices=True)
    inits = [vt[-1]]
    for _ in range(restarts):
        v = rng.standard_normal(d)
        inits.append(v / np.linalg.norm(v))
    best_axis, best_obj = None, np.inf
    for x0 in inits:
        sol = least_squares(residuals, x0, jac=jacobian, method="lm", xtol=1e-14, ftol=1e-14)
        axis = sol.x / np.linalg.norm(sol.x)
        obj = float(np.sum(residuals(axis) ** 2))
        if obj < best_obj - 1e-15 or best_axis is None:
            best_axis, best_obj = axis, obj
    return _canonical_axis(best_axis)


def _circle_frechet_mean(angles: np.ndarray, max_iters: int = 100) -> float:
    """Geodesic mean angle; data are assumed not to straddle the cut locus."""
    z = np.exp(1j * angles)
    mean = float(np.angle(z.mean())) if np.abs(z.mean()) > 1e-12 else float(angles[0])
    for _ in range(max_iters):
        dev = np.angle(np.exp(1j * (angles - mean)))
        shift = float(dev.mean())
        mean += shift
        if abs(shift) < 1e-14:
            break
    return mean


def pns(
    points: np.ndarray,
    num_levels: int,
    mode: str = "great_sphere",
    seed: int = 0,
    restarts: int = 10,
) -> PnsDecomposition:
    """Great-sphere principal nested spheres of unit vectors.

    Points spanning fewer dimensions than the ambient space are first
    rotated (losslessly) into their span; levels beyond the span carry zero
    residuals.
    """
    if mode != "great_sphere":
        raise ValueError(f"unsupported mode {mode!r}; only 'great_sphere' is implemented")
    points = np.asarray(points, dtype=float)
    n, ambient = points.shape
    if n < 3:
        raise ValueError("need at least 3 points")
    if num_levels < 1 or num_levels > min(n - 1, ambient - 1):
        raise ValueError("num_levels must be in [1, min(n_points - 1, ambient - 1)]")
    rng = np.random.default_rng(seed)
    points = points / np.linalg.norm(points, axis=1, keepdims=True)

    if np.max(np.linalg.norm(points - points[0], axis=1)) < 1e-12:
        return PnsDecomposition(
            subsphere_axes=[],
            subsphere_radii=np.zeros(0),
            signed_residuals=np.zeros((n, num_levels)),
            residual_offsets=np.zeros(num_levels),
            pole=points[0].copy(),
            num_levels=num_levels,
            degenerate=True,
        )

    u, s, vt = np.linalg.svd(points, full_matrices=False)
    rank = int(np.sum(s > max(n, ambient) * np.finfo(float).eps * s[0]))
    rank = max(rank, 2)
    basis = None
    cur = points
    if rank < ambient:
        basis = vt[:rank].T
        cur = points @ basis
        cur = cur / np.linalg.norm(cur, axis=1, keepdims=True)

    axes: list[np.ndarray] = []
    raw_scores: list[np.ndarray] = []  # fitting order: dim r down to 3
    d = cur.shape[1]
    while d > 2:
        axis = fit_great_subsphere(cur, rng=rng, restarts=restarts)
        resid = np.arcsin(np.clip(cur @ axis, -1.0, 1.0))
        axes.append(axis)
        raw_scores.append(resid)
        proj = cur - np.outer(cur @ axis, axis)
        proj = proj / np.linalg.norm(proj, axis=1, keepdims=True)
        rot = _rotation_to_last_axis(axis)
        cur = (proj @ rot.T)[:, : d - 1]
        cur = cur / np.linalg.norm(cur, axis=1, keepdims=True)
        d -= 1

    angles = np.arctan2(cur[:, 1], cur[:, 0])
    mean_angle = _circle_frechet_mean(angles)
    circle_scores = np.angle(np.exp(1j * (angles - mean_angle)))

    # depth order: circle first, then subsphere fits from deepest back up
    ordered = [circle_scores] + raw_scores[::-1]
    offsets_all = np.array([float(col.mean()) for col in ordered])
    centered = [col - off for col, off in zip(ordered, offsets_all)]
    available = len(centered)
    out = np.zeros((n, num_levels))
    offs = np.zeros(num_levels)
    for j in range(min(num_levels, available)):
        out[:, j] = centered[j]
        offs[j] = offsets_all[j]

    decomp = PnsDecomposition(
        subsphere_axes=axes,
        subsphere_radii=np.full(len(axes), np.pi / 2),
        signed_residuals=out,
        residual_offsets=offs,
        pole=np.zeros(ambient),
        num_levels=num_levels,
        degenerate=False,
        basis=basis,
        circle_mean_angle=mean_angle,
        all_offsets=offsets_all,
    )
    decomp.pole = pns_reconstruct(decomp, np.zeros(available))
    return decomp


def pns_reconstruct(decomp: PnsDecomposition, scores: np.ndarray) -> np.ndarray:
    """Map centered depth-ordered scores back to an ambient unit vector.

    Scores beyond the supplied vector sit at zero (their level's offset is
    still applied), so zeros reproduce the pole.
    """
    if decomp.degenerate:
        return decomp.pole.copy()
    scores = np.asarray(scores, dtype=float)
    total = decomp.all_offsets.size
    full = np.zeros(total)
    m = min(scores.size, total)  # trailing score slots may be zero-padded levels
    full[:m] = scores[:m]
    full = full + decomp.all_offsets

    ang = decomp.circle_mean_angle + full[0]
    z = np.array([np.cos(ang), np.sin(ang)])
    # lift through the subsphere fits, deepest first
    for j, axis in enumerate(reversed(decomp.subsphere_axes)):
        xi = full[1 + j]
        rot = _rotation_to_last_axis(axis)
        lifted = np.concatenate([np.cos(xi) * z, [np.sin(xi)]])
        z = rot.T @ lifted
    if decomp.basis is not None:
        z = decomp.basis @ z
    return z


def phase_pns(
    warps: list[Warp],
    num_levels: int = 4,
    mode: str = "great_sphere",
    seed: int = 0,
    restarts: int = 10,
) -> PnsDecomposition:
    """Phase modes of variation of a warp collection.

    Warps are mapped to psi representations, embedded in the Euclidean unit
    sphere with trapezoid quadrature weights (so geodesic distances match
    the function-space metric), and decomposed by great-sphere PNS.
    """
    if len(warps) < 3:
        raise ValueError("need at least 3 warps")
    grid = warps[0].grid
    w = np.full(grid.size, 1.0 / (grid.size - 1))
    w[0] = w[-1] = 0.5 / (grid.size - 1)
    sqrt_w = np.sqrt(w)
    psis = np.vstack([warp_to_sphere(wp).psi for wp in warps])
    points = psis * sqrt_w
    points = points / np.linalg.norm(points, axis=1, keepdims=True)
    decomp = pns(points, num_levels=num_levels, mode=mode, seed=seed, restarts=restarts)
    decomp.grid = grid
    decomp.embed_weights = sqrt_w
    return decomp


def pns_to_warp(decomp: PnsDecomposition, scores: np.ndarray) -> Warp:
    """Reconstruct a warp from phase PNS scores (phase_pns decompositions only)."""
    if decomp.grid is None or decomp.embed_weights is None:
        raise ValueError("decomposition does not carry a warp embedding")
    x = pns_reconstruct(decomp, scores)
    psi = x / decomp.embed_weights
    rep = WarpSphericalRep(grid=decomp.grid, psi=np.maximum(psi, 0.0))
    return sphere_to_warp(rep)


# ---------------------------------------------------------------------------
# Mode extremes and the combined score table
# ---------------------------------------------------------------------------


@dataclass
class ModeExtremes:
    """Curves at the low/high ends of one mode, plus the mean curve."""

    mode_index: int
    low_curve: Curve
    mean_curve: Curve
    high_curve: Curve


def _as_curve(values: np.ndarray, grid: np.ndarray, channels, trial_id: str) -> Curve:
    return Curve(
        trial_id=trial_id,
        subject_id="mode",
        channels=channels,
        grid=grid,
        values=np.atleast_2d(values),
    )


def mode_extremes(
    decomp: PcaDecomposition | PnsDecomposition,
    mode_index: int,
    scale: float | None = None,
    context: Curve | None = None,
) -> ModeExtremes:
    """Visualization curves at the extremes of one mode.

    With scale None the observed score extremes are used; otherwise the mode
    is traversed to +/- scale standard deviations. Amplitude modes move the
    mean along the component; phase modes reconstruct warps at the score
    extremes, invert them, and apply them to the supplied reference curve
    (normally the Karcher mean).
    """
    if isinstance(decomp, PcaDecomposition):
        if not 0 <= mode_index < decomp.n_components:
            raise IndexOutOfRange(f"mode {mode_index} of {decomp.n_components}")
        col = decomp.scores[:, mode_index]
        if scale is None:
            lo_s, hi_s = float(col.min()), float(col.max())
        else:
            sd = float(np.sqrt(decomp.explained_variance[mode_index]))
            lo_s, hi_s = -scale * sd, scale * sd
        comp = decomp.components[mode_index]
        name = f"{decomp.channel}_mode{mode_index + 1}"
        channels = (decomp.channel,)
        return ModeExtremes(
            mode_index=mode_index,
            low_curve=_as_curve(decomp.mean_curve + lo_s * comp, decomp.grid, channels, name + "_low"),
            mean_curve=_as_curve(decomp.mean_curve, decomp.grid, channels, name + "_mean"),
            high_curve=_as_curve(decomp.mean_curve + hi_s * comp, decomp.grid, channels, name + "_high"),
        )

    if not 0 <= mode_index < decomp.num_levels:
        raise IndexOutOfRange(f"mode {mode_index} of {decomp.num_levels}")
    if context is None:
        raise ValueError("phase mode extremes need a reference curve (the Karcher mean)")
    col = decomp.signed_residuals[:, mode_index]
    if scale is None:
        lo_s, hi_s = float(col.min()), float(col.max())
    else:
        sd = float(col.std(ddof=1)) if col.size > 1 else 0.0
        lo_s, hi_s = -scale * sd, scale * sd
    name = f"phase_mode{mode_index + 1}"

    def member(score: float, tag: str) -> Curve:
        vec = np.zeros(decomp.num_levels)
        vec[mode_index] = score
        warp = warp_invert(pns_to_warp(decomp, vec))
        curve = warp_curve(context, warp)
        return Curve(
            trial_id=f"{name}_{tag}",
            subject_id="mode",
            channels=curve.channels,
            grid=curve.grid,
            values=curve.values,
        )

    return ModeExtremes(
        mode_index=mode_index,
        low_curve=member(lo_s, "low"),
        mean_curve=member(0.0, "mean"),
        high_curve=member(hi_s, "high"),
    )


def score_table(
    amplitude_decomps: dict[str, PcaDecomposition],
    phase_decomp: PnsDecomposition,
    k: int,
) -> FeatureMatrix:
    """Combined per-curve predictor matrix: k amplitude modes per channel
    followed by k phase modes, column names embedded."""
    if k < 1:
        raise ValueError("k must be positive")
    blocks = []
    names = []
    n_rows = phase_decomp.signed_residuals.shape[0]
    for channel, decomp in amplitude_decomps.items():
        if decomp.scores.shape[0] != n_rows:
            raise SizeMismatch(
                f"{channel}: {decomp.scores.shape[0]} rows vs {n_rows} phase rows"
            )
        if decomp.n_components < k:
            raise SizeMismatch(f"{channel}: only {decomp.n_components} components, need {k}")
        blocks.append(decomp.scores[:, :k])
        names.extend(f"{channel}_PC{j + 1}" for j in range(k))
    if phase_decomp.num_levels < k:
        raise SizeMismatch(f"phase: only {phase_decomp.num_levels} levels, need {k}")
    blocks.append(phase_decomp.signed_residuals[:, :k])
    names.extend(f"phase_PNS{j + 1}" for j in range(k))
    return FeatureMatrix(values=np.hstack(blocks), columns=tuple(names))
