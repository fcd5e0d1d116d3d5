"""Scenes, RIS phase schedules and noisy CSI measurements."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import ParkingLayout

TWO_PI = 2.0 * np.pi

FREE_RANGE = (0.45, 0.55)
OCCUPIED_RANGE = (0.85, 0.95)

REFERENCE_MODES = ("averaged", "ideal", "previous")


def _matrix(A) -> np.ndarray:
    return getattr(A, "entries", A)


@dataclass(frozen=True)
class PhaseSchedule:
    """Random RIS phases; ``phases[t][k, m]`` is RIS ``t``, symbol ``k``, element ``m``."""

    phases: tuple[np.ndarray, ...]
    K: int
    seed: int

    @property
    def T(self) -> int:
        return len(self.phases)

    @property
    def ris_dims(self) -> tuple[int, ...]:
        return tuple(p.shape[1] for p in self.phases)


def generate_phase_schedule(K: int, ris_dims: Sequence[int], seed: int) -> PhaseSchedule:
    """Draw i.i.d. uniform phases in ``[0, 2 pi)`` for every symbol and element."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    rng = np.random.default_rng(seed)
    phases = []
    for M in ris_dims:
        p = np.mod(rng.random((K, int(M))) * TWO_PI, TWO_PI)
        p.flags.writeable = False
        phases.append(p)
    return PhaseSchedule(tuple(phases), int(K), int(seed))


@dataclass(frozen=True)
class ScatteringScene:
    sigma0: np.ndarray
    sigma1: np.ndarray
    occupied_spaces: frozenset[int]
    changed_units: frozenset[int]

    @property
    def delta(self) -> np.ndarray:
        return self.sigma1 - self.sigma0

    def to_json(self) -> str:
        """Debug dump keyed by unit index."""
        units = {str(q): {"sigma0": float(a), "sigma1": float(b)}
                 for q, (a, b) in enumerate(zip(self.sigma0, self.sigma1))}
        return json.dumps({"occupied_spaces": sorted(self.occupied_spaces),
                           "changed_units": sorted(self.changed_units),
                           "units": units}, indent=1)


def _park(layout: ParkingLayout, sigma0: np.ndarray, base: np.ndarray, occupied: set[int],
          candidates: Sequence[int], count: int, rng, occupied_range) -> ScatteringScene:
    if not 0 <= count <= len(candidates):
        raise ValueError(f"vehicle count {count} outside 0..{len(candidates)}")
    chosen = rng.choice(np.asarray(candidates, dtype=int), size=count, replace=False) if count else []
    sigma1 = base.copy()
    changed = []
    for space in sorted(int(c) for c in chosen):
        units = list(layout.spaces[space][1])
        sigma1[units] = rng.uniform(*occupied_range, size=len(units))
        changed.extend(units)
    return ScatteringScene(sigma0, sigma1, frozenset(occupied | {int(c) for c in chosen}),
                           frozenset(changed))


def generate_scene(layout: ParkingLayout, vehicle_count: int, rng,
                   free_range=FREE_RANGE, occupied_range=OCCUPIED_RANGE) -> ScatteringScene:
    """Empty-lot coefficients plus ``vehicle_count`` vehicles in distinct random spaces."""
    sigma0 = rng.uniform(*free_range, size=layout.Q)
    return _park(layout, sigma0, sigma0, set(), range(layout.n_spaces), vehicle_count, rng,
                 occupied_range)


def arrive(layout: ParkingLayout, previous: ScatteringScene, arrivals: int, rng,
           occupied_range=OCCUPIED_RANGE) -> ScatteringScene:
    """Park ``arrivals`` more vehicles in spaces that are free in ``previous``.

    The returned scene uses ``previous.sigma1`` as its baseline, so its
    difference image only covers the newly occupied spaces.
    """
    free = [s for s in range(layout.n_spaces) if s not in previous.occupied_spaces]
    return _park(layout, previous.sigma1, previous.sigma1, set(previous.occupied_spaces), free,
                 arrivals, rng, occupied_range)


def noise_variance(y: np.ndarray, snr_db: float) -> float:
    """Noise power ``E|n|^2`` per vector entry for a target SNR against ``y``."""
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("cannot reference SNR to an empty vector")
    power = float(np.mean(np.abs(y) ** 2))
    if power == 0:
        raise ValueError("SNR is undefined for an all-zero signal")
    return power / 10 ** (snr_db / 10)


def complex_noise(shape, variance: float, rng) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with ``E|n|^2 = variance``."""
    scale = np.sqrt(variance / 2)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def add_noise(y, snr_db: float, rng) -> np.ndarray:
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("cannot add noise to an empty vector")
    if np.isposinf(snr_db):
        return y.copy()
    return y + complex_noise(y.shape, noise_variance(y, snr_db), rng)


def synthesize_reference(A, sigma0, P: int, snr_db: float, rng) -> np.ndarray:
    """Average of ``P`` independent noisy sessions of the empty lot."""
    if P < 1:
        raise ValueError(f"P must be at least 1, got {P}")
    clean = _matrix(A) @ np.asarray(sigma0)
    if np.isposinf(snr_db):
        return clean
    sessions = complex_noise((P,) + clean.shape, noise_variance(clean, snr_db), rng)
    return clean + sessions.mean(axis=0)


def synthesize_occupied(A, sigma1, snr_db: float, rng) -> np.ndarray:
    M = _matrix(A)
    sigma1 = np.asarray(sigma1)
    if M.shape[1] != sigma1.shape[0]:
        raise ValueError(f"matrix has {M.shape[1]} columns, sigma has {sigma1.shape[0]} entries")
    return add_noise(M @ sigma1, snr_db, rng)


def difference(y1, y0) -> np.ndarray:
    y1 = np.asarray(y1)
    y0 = np.asarray(y0)
    if y1.shape != y0.shape:
        raise ValueError(f"shape mismatch {y1.shape} vs {y0.shape}")
    return y1 - y0


@dataclass(frozen=True)
class MeasurementSet:
    y0: np.ndarray
    y1: np.ndarray
    delta_y: np.ndarray
    snr_db: float
    P: int
    seed: int | None = None


def acquire(A, scene: ScatteringScene, snr_db: float, rng, P: int = 100,
            mode: str = "averaged", seed: int | None = None) -> MeasurementSet:
    """Reference and occupied measurements of ``scene`` and their difference.

    ``mode`` selects how the reference is formed: ``"averaged"`` over ``P``
    noisy sessions, ``"ideal"`` (noise-free ``A @ sigma0``), or
    ``"previous"``, a single noisy session like the occupied one.
    """
    if mode == "averaged":
        y0 = synthesize_reference(A, scene.sigma0, P, snr_db, rng)
    elif mode == "ideal":
        y0 = synthesize_reference(A, scene.sigma0, 1, np.inf, rng)
        P = 0
    elif mode == "previous":
        y0 = synthesize_occupied(A, scene.sigma0, snr_db, rng)
        P = 1
    else:
        raise ValueError(f"unknown reference mode {mode!r}; expected one of {REFERENCE_MODES}")
    y1 = synthesize_occupied(A, scene.sigma1, snr_db, rng)
    return MeasurementSet(y0, y1, difference(y1, y0), float(snr_db), P, seed)
