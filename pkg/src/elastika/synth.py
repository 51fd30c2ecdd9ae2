"""Synthetic gait-like datasets with known ground truth.

Curves mimic the qualitative structure of stance-phase force data: a
two-peak vertical channel with a mid-stance valley, a braking/propulsion
S-curve, and a low-amplitude medial-lateral bump. Each trial is a warped,
amplitude-scaled copy of its template, so alignment and mode extraction can
be checked against the generating warps and factors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import Curve, Dataset, GRF_CHANNELS, uniform_grid
from .srvf import Warp, WarpSphericalRep, l2_norm, sphere_to_warp

# sup |unit tangent| below this keeps psi = cos(s) + sin(s) u strictly
# positive for geodesic steps s <= 0.5, hence gamma strictly increasing
_MAX_TANGENT_SUP = 1.8


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int = 20
    trials_per_subject: int = 3
    grid_length: int = 101
    template: str = "two_peak"  # two_peak | unimodal | mixed
    warp_strength: float = 0.2
    amplitude_sd: float = 0.05
    noise_sd: float = 0.0
    seed: int = 0
    mixed_fraction: float = 0.2

    def validate(self) -> "SynthConfig":
        if self.n_subjects < 1 or self.trials_per_subject < 1 or self.grid_length < 4:
            raise ValueError("counts must be positive and grid_length >= 4")
        if min(self.warp_strength, self.amplitude_sd, self.noise_sd) < 0:
            raise ValueError("strengths and standard deviations must be nonnegative")
        if self.template not in ("two_peak", "unimodal", "mixed"):
            raise ValueError(f"unknown template {self.template!r}")
        return self


@dataclass
class GroundTruth:
    """Generating quantities recorded per curve, in dataset order."""

    templates: dict[str, np.ndarray]
    grid: np.ndarray
    warps: list[Warp]
    amplitude_factors: np.ndarray
    kinds: list[str]
    subject_ids: list[str]
    trial_ids: list[str]
    trait_coefficients: dict = field(default_factory=dict)


def _bump(t: np.ndarray, center: float, width: float) -> np.ndarray:
    """Raised-cosine bump with compact support [center - width, center + width]."""
    out = np.zeros_like(t)
    inside = np.abs(t - center) < width
    out[inside] = 0.5 * (1.0 + np.cos(np.pi * (t[inside] - center) / width))
    return out


def template_values(kind: str, grid: np.ndarray) -> np.ndarray:
    """Channel templates (vGRF, apGRF, mlGRF) for one gait shape."""
    if kind == "two_peak":
        vgrf = (
            1.1 * _bump(grid, 0.25, 0.25)
            + 0.75 * _bump(grid, 0.5, 0.30)
            + 1.1 * _bump(grid, 0.75, 0.25)
        )
        apgrf = -0.18 * _bump(grid, 0.25, 0.20) + 0.20 * _bump(grid, 0.75, 0.20)
        mlgrf = 0.05 * _bump(grid, 0.5, 0.45)
    elif kind == "unimodal":
        vgrf = 1.0 * _bump(grid, 0.5, 0.45)
        apgrf = -0.02 * _bump(grid, 0.35, 0.25) + 0.02 * _bump(grid, 0.7, 0.22)
        mlgrf = 0.04 * _bump(grid, 0.45, 0.40)
    else:
        raise ValueError(f"unknown template kind {kind!r}")
    return np.vstack([vgrf, apgrf, mlgrf])


def _unit_tangent(rng: np.random.Generator, grid: np.ndarray, n_harmonics: int = 4) -> np.ndarray:
    """Smooth random direction tangent to the psi sphere at the pole psi = 1.

    Built from cosine harmonics (each integrates to zero, hence orthogonal
    to the pole), normalized to unit L2 norm, and rejected while its sup
    norm would threaten monotonicity of the exponentiated warp.
    """
    k = np.arange(1, n_harmonics + 1)
    basis = np.sqrt(2.0) * np.cos(np.pi * np.outer(k, grid))
    while True:
        coeff = rng.standard_normal(n_harmonics) / k**2
        u = coeff @ basis
        nrm = l2_norm(u, grid)
        if nrm < 1e-12:
            continue
        u = u / nrm
        if np.max(np.abs(u)) < _MAX_TANGENT_SUP:
            return u


def random_warp(rng: np.random.Generator, grid: np.ndarray, strength: float) -> Warp:
    """Random smooth diffeomorphism: sphere exponential of tangent noise.

    ``strength`` is the geodesic radius (radians) of the step away from the
    identity warp; strictly monotone output is guaranteed for strength <= 0.5.
    """
    if strength <= 0:
        return Warp(grid=grid, gamma=grid.copy())
    u = _unit_tangent(rng, grid)
    s = strength * rng.uniform(0.3, 1.0)
    psi = np.cos(s) + np.sin(s) * u
    return sphere_to_warp(WarpSphericalRep(grid=grid, psi=psi))


def _smooth_noise(rng: np.random.Generator, grid: np.ndarray, sd: float, n_harmonics: int = 8) -> np.ndarray:
    """Band-limited noise vanishing at both endpoints."""
    k = np.arange(1, n_harmonics + 1)
    basis = np.sin(np.pi * np.outer(k, grid))
    coeff = rng.standard_normal(n_harmonics) / k
    noise = coeff @ basis
    return sd * noise


def generate(config: SynthConfig) -> tuple[Dataset, GroundTruth]:
    """Generate a synthetic dataset and its generating ground truth."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    grid = uniform_grid(config.grid_length)
    templates = {k: template_values(k, grid) for k in ("two_peak", "unimodal")}

    curves = []
    gt = GroundTruth(
        templates=templates,
        grid=grid,
        warps=[],
        amplitude_factors=np.zeros(config.n_subjects * config.trials_per_subject),
        kinds=[],
        subject_ids=[],
        trial_ids=[],
    )
    row = 0
    for s in range(config.n_subjects):
        sid = f"S{s:03d}"
        if config.template == "mixed":
            kind = "unimodal" if rng.uniform() < config.mixed_fraction else "two_peak"
        else:
            kind = config.template
        amp_subject = max(1.0 + config.amplitude_sd * rng.standard_normal(), 0.1)
        u_subject = _unit_tangent(rng, grid)
        for t in range(config.trials_per_subject):
            tid = f"{sid}T{t}"
            if config.warp_strength > 0:
                u_trial = _unit_tangent(rng, grid)
                mix = 0.7 * u_subject + 0.3 * u_trial
                mix = mix / l2_norm(mix, grid)
                if np.max(np.abs(mix)) >= _MAX_TANGENT_SUP:
                    mix = u_trial
                step = config.warp_strength * rng.uniform(0.3, 1.0)
                psi = np.cos(step) + np.sin(step) * mix
                warp = sphere_to_warp(WarpSphericalRep(grid=grid, psi=psi))
            else:
                warp = Warp(grid=grid, gamma=grid.copy())
            amp = max(amp_subject * (1.0 + 0.3 * config.amplitude_sd * rng.standard_normal()), 0.1)
            base = templates[kind]
            values = amp * np.vstack([np.interp(warp.gamma, grid, ch) for ch in base])
            if config.noise_sd > 0:
                values = values + np.vstack(
                    [_smooth_noise(rng, grid, config.noise_sd) for _ in range(values.shape[0])]
                )
                values[0] = np.maximum(values[0], 0.0)
            curves.append(
                Curve(
                    trial_id=tid,
                    subject_id=sid,
                    channels=GRF_CHANNELS,
                    grid=grid,
                    values=values,
                )
            )
            gt.warps.append(warp)
            gt.amplitude_factors[row] = amp
            gt.kinds.append(kind)
            gt.subject_ids.append(sid)
            gt.trial_ids.append(tid)
            row += 1
    dataset = Dataset(curves=tuple(curves)).validate()
    return dataset, gt


def synthesize_traits(ground_truth: GroundTruth, seed: int = 0) -> dict[str, dict[str, float]]:
    """Subject-level traits tied to the generating effects, plus pure noise.

    Returns trait name -> subject_id -> value. ``amp_trait`` tracks each
    subject's mean amplitude factor, ``phase_trait`` tracks mean warp
    displacement, and ``noise_trait`` carries no signal.
    """
    rng = np.random.default_rng(seed)
    subjects = list(dict.fromkeys(ground_truth.subject_ids))
    amp_by_subject = {sid: [] for sid in subjects}
    phase_by_subject = {sid: [] for sid in subjects}
    for sid, amp, warp in zip(
        ground_truth.subject_ids, ground_truth.amplitude_factors, ground_truth.warps
    ):
        amp_by_subject[sid].append(amp)
        phase_by_subject[sid].append(float(np.max(np.abs(warp.gamma - warp.grid))))
    traits: dict[str, dict[str, float]] = {"amp_trait": {}, "phase_trait": {}, "noise_trait": {}}
    for sid in subjects:
        traits["amp_trait"][sid] = float(
            np.mean(amp_by_subject[sid]) + 0.02 * rng.standard_normal()
        )
        traits["phase_trait"][sid] = float(
            np.mean(phase_by_subject[sid]) + 0.005 * rng.standard_normal()
        )
        traits["noise_trait"][sid] = float(rng.standard_normal())
    ground_truth.trait_coefficients = {
        "amp_trait": {"source": "amplitude_factors", "noise_sd": 0.02},
        "phase_trait": {"source": "warp_sup_displacement", "noise_sd": 0.005},
        "noise_trait": {"source": "none", "noise_sd": 1.0},
    }
    return traits
