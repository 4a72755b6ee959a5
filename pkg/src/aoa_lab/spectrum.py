"""Spatial spectrum container shared by the pattern and estimator code."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Azimuth grid (radians, strictly increasing) paired with nonnegative
    power values.

    ``circular`` marks grids that wrap around (UCA full-circle spectra), which
    matters for local-maximum detection at the grid ends. ``geometry`` is the
    array the spectrum was computed for, if any.
    """

    angles: np.ndarray
    values: np.ndarray
    estimator: str
    params: dict[str, Any] = field(default_factory=dict)
    circular: bool = False
    geometry: Any = None

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if angles.ndim != 1 or angles.size == 0:
            raise ValueError("spectrum needs a nonempty 1-D angle grid")
        if angles.shape != values.shape:
            raise ValueError("angles and values differ in length")
        if angles.size > 1 and np.any(np.diff(angles) <= 0):
            raise ValueError("spectrum angles must be strictly increasing")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("spectrum values must be finite and nonnegative")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "values", values)

    @property
    def angles_deg(self) -> np.ndarray:
        return np.rad2deg(self.angles)

    def normalized_db(self, floor_db: float = -300.0) -> np.ndarray:
        """Values in dB relative to the spectrum peak (peak = 0 dB)."""
        peak = self.values.max()
        if peak <= 0:
            return np.full(self.values.shape, floor_db)
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(self.values / peak)
        return np.maximum(db, floor_db)

    def __len__(self) -> int:
        return self.angles.size
