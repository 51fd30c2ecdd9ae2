"""Conventional discrete summaries (landmarks) of GRF curves.

Three landmarks form the baseline predictor set: the first vertical peak
(maximum over the first half of stance) and the anterior-posterior braking
and propulsion peaks. Two window conventions exist in the literature for
the anterior-posterior extrema: restricted to the first/second half of
stance ("windowed") or taken over the whole of stance ("full_range"); the
vertical first peak stays windowed to [0, 0.5] in both.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Curve, Dataset
from .tables import FeatureMatrix

CONVENTIONS = ("windowed", "full_range")

LANDMARK_COLUMNS = ("vgrf_first_peak", "apgrf_braking_peak", "apgrf_propulsion_peak")


@dataclass(frozen=True)
class LandmarkVector:
    vgrf_first_peak: float
    apgrf_braking_peak: float
    apgrf_propulsion_peak: float
    window_convention: str

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.vgrf_first_peak, self.apgrf_braking_peak, self.apgrf_propulsion_peak]
        )


def extract_landmarks(
    curve: Curve,
    convention: str = "windowed",
    vgrf_channel: str = "vGRF",
    apgrf_channel: str = "apGRF",
) -> LandmarkVector:
    """Extremum landmarks of one curve under the given window convention.

    Extrema are taken over grid samples without sub-grid interpolation;
    window boundaries are inclusive, so a sample at t = 0.5 belongs to both
    halves.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")
    vgrf = curve.channel(vgrf_channel)
    apgrf = curve.channel(apgrf_channel)
    first_half = curve.grid <= 0.5
    second_half = curve.grid >= 0.5
    vgrf_peak = float(vgrf[first_half].max())
    if convention == "windowed":
        braking = float(apgrf[first_half].min())
        propulsion = float(apgrf[second_half].max())
    else:
        braking = float(apgrf.min())
        propulsion = float(apgrf.max())
    return LandmarkVector(
        vgrf_first_peak=vgrf_peak,
        apgrf_braking_peak=braking,
        apgrf_propulsion_peak=propulsion,
        window_convention=convention,
    )


def landmark_matrix(dataset: Dataset, convention: str = "windowed") -> FeatureMatrix:
    """Landmark rows for every curve of a dataset, in dataset order."""
    rows = [extract_landmarks(c, convention).as_array() for c in dataset.curves]
    return FeatureMatrix(
        values=np.vstack(rows),
        columns=LANDMARK_COLUMNS,
        trial_ids=tuple(c.trial_id for c in dataset.curves),
        subject_ids=tuple(c.subject_id for c in dataset.curves),
    )
