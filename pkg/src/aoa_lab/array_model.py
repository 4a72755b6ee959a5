"""Array geometries, steering vectors and beam-pattern evaluation.

All lengths are in wavelengths, so the wave number times a distance reduces
to ``2*pi*distance``. Elevation is fixed at 90 degrees (azimuth-only model).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectrum import Spectrum

DEFAULT_GRID_STEP_DEG = 0.5
HPBW_GRID_STEP_DEG = 0.01


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear (``"ula"``) or uniform circular (``"uca"``) array.

    ``spacing`` is the ULA inter-element distance and ``radius`` the UCA
    radius, both in wavelengths. The azimuth domain is ``[0, pi]`` for a ULA
    and ``[0, 2*pi)`` for a UCA.
    """

    kind: str
    elements: int
    spacing: float | None = None
    radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("ula", "uca"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if int(self.elements) != self.elements or self.elements < 2:
            raise ValueError("an array needs at least 2 elements")
        if self.kind == "ula" and not (self.spacing is not None and self.spacing > 0):
            raise ValueError("ULA spacing must be positive")
        if self.kind == "uca" and not (self.radius is not None and self.radius > 0):
            raise ValueError("UCA radius must be positive")

    @classmethod
    def ula(cls, elements: int, spacing: float = 0.5) -> "ArrayGeometry":
        return cls("ula", int(elements), spacing=float(spacing))

    @classmethod
    def uca(cls, elements: int, radius: float | None = None) -> "ArrayGeometry":
        """UCA; the default radius gives half-wavelength adjacent spacing."""
        if radius is None:
            radius = 0.25 / np.sin(np.pi / elements)
        return cls("uca", int(elements), radius=float(radius))

    @property
    def M(self) -> int:
        return self.elements

    @property
    def circular(self) -> bool:
        return self.kind == "uca"

    @property
    def domain(self) -> tuple[float, float]:
        return (0.0, np.pi) if self.kind == "ula" else (0.0, 2 * np.pi)

    def in_domain(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        eps = 1e-12
        if self.kind == "ula":
            return (phi >= -eps) & (phi <= np.pi + eps)
        return (phi >= -eps) & (phi < 2 * np.pi)

    def default_grid(self, step_deg: float = DEFAULT_GRID_STEP_DEG) -> np.ndarray:
        """Evaluation grid over the whole azimuth domain, in radians."""
        if self.kind == "ula":
            deg = np.arange(0.0, 180.0 + step_deg / 2, step_deg)
        else:
            deg = np.arange(0.0, 360.0 - step_deg / 2, step_deg)
        return np.deg2rad(deg)

    def describe(self) -> str:
        if self.kind == "ula":
            return f"ULA(M={self.elements}, d={self.spacing:g})"
        return f"UCA(M={self.elements}, r={self.radius:.4g})"


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Complex element excitations plus a provenance label."""

    weights: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.complex128)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-D vector")
        if not np.any(w != 0):
            raise ValueError("weight vector is all zero")
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.weights.size


def _check_domain(geom: ArrayGeometry, phi) -> None:
    if not np.all(geom.in_domain(phi)):
        raise ValueError("azimuth out of range")


def steering_matrix(geom: ArrayGeometry, phi) -> np.ndarray:
    """``M x G`` matrix of steering vectors, one column per angle in ``phi``.

    No domain check: pattern code evaluates ULA responses on the full circle.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    m = np.arange(geom.elements)
    if geom.kind == "ula":
        phase = 2 * np.pi * geom.spacing * np.outer(m, np.cos(phi))
    else:
        elem = 2 * np.pi * (m + 1) / geom.elements
        phase = 2 * np.pi * geom.radius * np.cos(phi[None, :] - elem[:, None])
    return np.exp(1j * phase)


def steering_vector(geom: ArrayGeometry, phi: float) -> np.ndarray:
    """Array response to a unit plane wave from azimuth ``phi`` (radians)."""
    _check_domain(geom, phi)
    return steering_matrix(geom, float(phi))[:, 0]


def uniform_weights(geom: ArrayGeometry, phi: float) -> WeightVector:
    """``a(phi) / M``: unit gain toward ``phi``."""
    a = steering_vector(geom, phi)
    return WeightVector(a / geom.elements, label=f"uniform({np.rad2deg(phi):.3f})")


def _weights_of(w) -> np.ndarray:
    return w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.complex128)


def pattern(geom: ArrayGeometry, w, phi) -> np.ndarray:
    """Power response ``|w^H a(phi)|^2`` without domain checks."""
    wv = _weights_of(w)
    if wv.size != geom.elements:
        raise ValueError(f"weight length {wv.size} does not match M={geom.elements}")
    return np.abs(wv.conj() @ steering_matrix(geom, phi)) ** 2


def array_factor(geom: ArrayGeometry, w, grid=None) -> Spectrum:
    """Beam pattern ``|w^H a(phi)|^2`` over ``grid`` (default 0.5 deg)."""
    grid = geom.default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty azimuth grid")
    _check_domain(geom, grid)
    label = w.label if isinstance(w, WeightVector) else "custom"
    return Spectrum(
        grid,
        pattern(geom, w, grid),
        estimator="pattern",
        params={"weights": label},
        circular=geom.circular,
        geometry=geom,
    )


def _crossing(p: np.ndarray, start: int, step: int, level: float, n: int) -> float:
    """Walk circularly from ``start`` until ``p`` drops below ``level``; return
    the fractional index of the crossing (linear interpolation)."""
    i = start
    for k in range(1, n // 2):
        j = (start + step * k) % n
        if p[j] < level:
            prev = p[i]
            frac = (prev - level) / (prev - p[j])
            return start + step * (k - 1 + frac)
        i = j
    raise ValueError("beam too broad")


def hpbw(geom: ArrayGeometry, w, step_deg: float = HPBW_GRID_STEP_DEG) -> float:
    """Half-power beam width in degrees of the main lobe.

    The peak is located over the azimuth domain; the -3 dB points are then
    searched on the full circle so that lobes touching the ULA endfire
    boundary are measured on both sides.
    """
    circle = np.deg2rad(np.arange(0.0, 360.0, step_deg))
    p = pattern(geom, w, circle)
    n = circle.size
    if geom.kind == "ula":
        half = int(round(180.0 / step_deg))
        peak = int(np.argmax(p[: half + 1]))
    else:
        peak = int(np.argmax(p))
    level = 0.5 * p[peak]
    if level <= 0:
        raise ValueError("beam too broad")
    right = _crossing(p, peak, 1, level, n)
    left = _crossing(p, peak, -1, level, n)
    return (right - left) * step_deg


@lru_cache(maxsize=4096)
def uniform_hpbw(geom: ArrayGeometry, phi_deg: float) -> float:
    """HPBW (deg) of the uniform beam steered to ``phi_deg``; cached."""
    w = steering_matrix(geom, np.deg2rad(phi_deg))[:, 0] / geom.elements
    return hpbw(geom, w)
