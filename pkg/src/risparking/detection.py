"""Occupancy decisions and the detection-rate / NMSE / FAR metrics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .geometry import ParkingLayout

NMSE_FLOOR_DB = -300.0


@dataclass(frozen=True)
class DetectionConfig:
    tau1: float = 0.25
    tau2: float = 0.55
    eta: float = 0.5

    def __post_init__(self):
        if not self.tau1 < self.tau2:
            raise ValueError(f"tau1 ({self.tau1}) must be below tau2 ({self.tau2})")
        if not 0 < self.eta <= 1:
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")


def classify_units(delta_sigma_hat, cfg: DetectionConfig) -> np.ndarray:
    """Binary occupancy image: 1 where ``tau1 < Re(delta) < tau2``."""
    v = np.real(np.asarray(delta_sigma_hat))
    return ((v > cfg.tau1) & (v < cfg.tau2)).astype(np.int8)


def classify_spaces(omega, layout: ParkingLayout, eta: float) -> np.ndarray:
    """Per-space status: occupied when the flagged fraction of its units is at least ``eta``."""
    omega = np.asarray(omega)
    if omega.shape != (layout.Q,):
        raise ValueError(f"image of shape {omega.shape} does not match {layout.Q} grid units")
    if layout.n_spaces == 0:
        return np.zeros(0, dtype=bool)
    fraction = omega[layout.space_units].sum(axis=1) / layout.C
    return fraction >= eta


def to_db(ratio: float) -> float:
    if math.isnan(ratio):
        return math.nan
    if ratio <= 0:
        return NMSE_FLOOR_DB
    return max(10 * math.log10(ratio), NMSE_FLOOR_DB)


@dataclass(frozen=True)
class MetricsReport:
    """Metrics of one trial (or an aggregate of several).

    ``nmse`` is the linear error ratio ``||est - true||^2 / ||true||^2``;
    NaN when the true difference image is zero.
    """

    detection_rate: float
    far: float
    nmse: float
    D: int
    D1: int
    D2: int

    @property
    def nmse_db(self) -> float:
        return to_db(self.nmse)


def compute_metrics(true_status, predicted_status, delta_true, delta_hat) -> MetricsReport:
    """Detection rate ``D1/D``, FAR ``D2/D`` and the NMSE ratio for one trial.

    With no vehicles (``D == 0``) the detection rate is 1 when nothing was
    flagged and 0 otherwise, FAR is the raw false-alarm count, and NMSE is
    undefined.
    """
    truth = np.asarray(true_status, dtype=bool)
    pred = np.asarray(predicted_status, dtype=bool)
    if truth.shape != pred.shape:
        raise ValueError(f"status shapes differ: {truth.shape} vs {pred.shape}")
    D = int(truth.sum())
    D1 = int((truth & pred).sum())
    D2 = int((~truth & pred).sum())
    if D:
        rate = D1 / D
    else:
        rate = 1.0 if D2 == 0 else 0.0
    far = D2 / max(D, 1)

    delta_true = np.asarray(delta_true)
    ref = float(np.sum(np.abs(delta_true) ** 2))
    if ref > 0:
        nmse = float(np.sum(np.abs(np.asarray(delta_hat) - delta_true) ** 2)) / ref
    else:
        nmse = math.nan
    return MetricsReport(rate, far, nmse, D, D1, D2)


def aggregate(reports: Iterable[MetricsReport]) -> MetricsReport:
    """Average per-trial rates and NMSE ratios; counts are summed.

    NMSE is the mean of the per-trial ratios over trials where it is defined.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("nothing to aggregate")
    nmse_terms = [r.nmse for r in reports if not math.isnan(r.nmse)]
    return MetricsReport(
        detection_rate=math.fsum(r.detection_rate for r in reports) / len(reports),
        far=math.fsum(r.far for r in reports) / len(reports),
        nmse=math.fsum(nmse_terms) / len(nmse_terms) if nmse_terms else math.nan,
        D=sum(r.D for r in reports),
        D1=sum(r.D1 for r in reports),
        D2=sum(r.D2 for r in reports),
    )
