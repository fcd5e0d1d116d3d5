"""Spherical-wave channel model for the TX -> ROI -> RIS -> RX path.

Every hop uses the free-space form ``exp(-j 2 pi d / lam) / (sqrt(4 pi) d)``.
The sensing matrix maps ROI scattering coefficients to stacked CSI
measurements; ``sensing_row_bruteforce`` evaluates the same quantity one
subpath at a time and serves as an independent check.
"""
from __future__ import annotations

import cmath
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .geometry import PlanarArray, Scene, as_points

if TYPE_CHECKING:
    from .measurement import PhaseSchedule

SPEED_OF_LIGHT = 299_792_458.0
_NORM = math.sqrt(4.0 * math.pi)

MATRIX_MAGIC = b"RISM"
MATRIX_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


class DegenerateGeometryError(ValueError):
    """Raised when two points of a propagation hop coincide."""


@dataclass(frozen=True)
class RadioConfig:
    frequency: float = 3e9
    gain: complex = 1.0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency}")
        if self.gain == 0:
            raise ValueError("gain constant must be nonzero")

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency


def _propagate(d: np.ndarray, wavelength: float) -> np.ndarray:
    if np.any(d <= 0):
        raise DegenerateGeometryError("zero propagation distance between two points")
    return np.exp(-2j * np.pi * d / wavelength) / (_NORM * d)


def steering_vector(src, targets, wavelength: float) -> np.ndarray:
    """Free-space responses from ``src`` to each of ``targets``."""
    src = as_points(src)[0]
    targets = as_points(targets)
    d = np.linalg.norm(targets - src, axis=1)
    return _propagate(d, wavelength)


def pairwise_channel(points_a, points_b, wavelength: float) -> np.ndarray:
    """Matrix of free-space responses, entry ``(a, b)`` for the hop a -> b."""
    a = as_points(points_a)
    b = as_points(points_b)
    diff = a[:, None, :] - b[None, :, :]
    d = np.sqrt(np.einsum("abk,abk->ab", diff, diff))
    return _propagate(d, wavelength)


def _elements(ris) -> np.ndarray:
    return ris.elements if isinstance(ris, PlanarArray) else as_points(ris)


def sensing_row(tx, rx, ris, roi_centers, phases, radio: RadioConfig) -> np.ndarray:
    """One row of the sensing matrix: ``g diag(h_tx) H diag(e^{-j w}) h_rx``.

    ``ris`` is a `PlanarArray` or an ``(M, 3)`` array of element positions.
    """
    elements = _elements(ris)
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (len(elements),):
        raise ValueError(f"expected {len(elements)} phases, got shape {phases.shape}")
    lam = radio.wavelength
    h_tx = steering_vector(tx, roi_centers, lam)
    H = pairwise_channel(roi_centers, elements, lam)
    h_rx = steering_vector(rx, elements, lam)
    return radio.gain * h_tx * (H @ (np.exp(-1j * phases) * h_rx))


def _bruteforce_kernel(tx, rx, elements, roi, phases, wavelength, gain_re, gain_im):
    Q = roi.shape[0]
    M = elements.shape[0]
    out = np.zeros(Q, dtype=np.complex128)
    k = 2.0 * math.pi / wavelength
    norm = math.sqrt(4.0 * math.pi)
    g = complex(gain_re, gain_im)
    for q in range(Q):
        d1 = math.sqrt((tx[0] - roi[q, 0]) ** 2 + (tx[1] - roi[q, 1]) ** 2 + (tx[2] - roi[q, 2]) ** 2)
        if d1 == 0.0:
            return out, False
        acc = 0j
        for m in range(M):
            d2 = math.sqrt((roi[q, 0] - elements[m, 0]) ** 2 + (roi[q, 1] - elements[m, 1]) ** 2
                           + (roi[q, 2] - elements[m, 2]) ** 2)
            d3 = math.sqrt((elements[m, 0] - rx[0]) ** 2 + (elements[m, 1] - rx[1]) ** 2
                           + (elements[m, 2] - rx[2]) ** 2)
            if d2 == 0.0 or d3 == 0.0:
                return out, False
            acc += (g * cmath.exp(-1j * k * d1) / (norm * d1)
                    * cmath.exp(-1j * k * d2) / (norm * d2)
                    * cmath.exp(-1j * phases[m])
                    * cmath.exp(-1j * k * d3) / (norm * d3))
        out[q] = acc
    return out, True


try:
    import numba

    _bruteforce = numba.njit(cache=True)(_bruteforce_kernel)
except ImportError:  # pragma: no cover
    _bruteforce = _bruteforce_kernel


def sensing_row_bruteforce(tx, rx, ris, roi_centers, phases, radio: RadioConfig) -> np.ndarray:
    """Per-subpath summation of the cascaded channel with the scattering coefficient factored out."""
    elements = np.ascontiguousarray(_elements(ris))
    phases = np.ascontiguousarray(phases, dtype=float)
    if phases.shape != (len(elements),):
        raise ValueError(f"expected {len(elements)} phases, got shape {phases.shape}")
    g = complex(radio.gain)
    out, ok = _bruteforce(as_points(tx)[0], as_points(rx)[0], elements,
                          np.ascontiguousarray(as_points(roi_centers)), phases,
                          radio.wavelength, g.real, g.imag)
    if not ok:
        raise DegenerateGeometryError("zero propagation distance between two points")
    return out


@dataclass(frozen=True)
class SensingMatrix:
    """Stacked sensing matrix.

    Rows are grouped in blocks of ``K`` consecutive symbols, one block per
    (TX antenna, RIS, RX antenna) triple in lexicographic order.
    """

    entries: np.ndarray
    n_tx: int
    K: int
    T: int
    n_rx: int

    @property
    def N_A(self) -> int:
        return self.entries.shape[0]

    @property
    def Q(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def row_index(self, i: int, k: int, t: int, j: int) -> int:
        if not (0 <= i < self.n_tx and 0 <= k < self.K and 0 <= t < self.T and 0 <= j < self.n_rx):
            raise IndexError(f"(i={i}, k={k}, t={t}, j={j}) out of range")
        return ((i * self.T + t) * self.n_rx + j) * self.K + k

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def build_sensing_matrix(scene: Scene, schedule: "PhaseSchedule", radio: RadioConfig) -> SensingMatrix:
    """Assemble the full ``N_A x Q`` sensing matrix for ``scene``."""
    if schedule.T != scene.T:
        raise ValueError(f"schedule covers {schedule.T} RISs, scene has {scene.T}")
    lam = radio.wavelength
    roi = scene.grid.centers
    K = schedule.K
    h_tx = [steering_vector(p, roi, lam) for p in scene.tx]
    # blocks[i][t][j] -> (K, Q)
    blocks = [[[None] * scene.n_rx for _ in range(scene.T)] for _ in range(scene.n_tx)]
    for t, ris in enumerate(scene.ris):
        phases = schedule.phases[t]
        if phases.shape != (K, ris.M):
            raise ValueError(f"RIS {t}: expected phases of shape {(K, ris.M)}, got {phases.shape}")
        elements = ris.elements
        H = pairwise_channel(roi, elements, lam)
        weights = np.exp(-1j * phases)
        for j, rx in enumerate(scene.rx):
            ris_to_rx = (weights * steering_vector(rx, elements, lam)) @ H.T
            for i in range(scene.n_tx):
                blocks[i][t][j] = radio.gain * h_tx[i] * ris_to_rx
    rows = [blocks[i][t][j] for i in range(scene.n_tx) for t in range(scene.T) for j in range(scene.n_rx)]
    entries = np.ascontiguousarray(np.vstack(rows))
    entries.flags.writeable = False
    return SensingMatrix(entries, scene.n_tx, K, scene.T, scene.n_rx)


def save_matrix(entries, path) -> None:
    """Write a complex matrix to the binary ``RISM`` cache format."""
    entries = np.ascontiguousarray(np.asarray(entries), dtype="<c16")
    if entries.ndim != 2:
        raise ValueError("only 2-D matrices can be cached")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, MATRIX_VERSION, *entries.shape))
        fh.write(entries.tobytes(order="C"))


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n_rows, n_cols = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != MATRIX_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 16 * n_rows * n_cols
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    body = np.frombuffer(data, dtype="<c16", offset=_HEADER.size)
    return body.reshape(n_rows, n_cols).astype(np.complex128)
