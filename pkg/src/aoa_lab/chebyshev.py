"""Dolph-Chebyshev tapers and switched-beam grids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, WeightVector, hpbw, steering_matrix


def chebyshev_polynomial(order: int, x) -> np.ndarray:
    """Chebyshev polynomial of the first kind, valid for any real ``x``."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    inside = np.abs(x) <= 1
    out[inside] = np.cos(order * np.arccos(x[inside]))
    hi = x > 1
    out[hi] = np.cosh(order * np.arccosh(x[hi]))
    lo = x < -1
    out[lo] = (-1) ** order * np.cosh(order * np.arccosh(-x[lo]))
    return out


def chebyshev_weights(M: int, sll_db: float) -> np.ndarray:
    """Real Dolph-Chebyshev taper of ``M`` elements.

    The broadside pattern is ``T_{M-1}(x0 * cos(psi / 2))`` with
    ``x0 = cosh(acosh(R) / (M - 1))`` and ``R = 10**(sll_db / 20)``, so every
    sidelobe sits exactly ``sll_db`` below the main lobe. The pattern is
    sampled at ``M`` equispaced electrical angles and inverse-transformed to
    element coefficients. Normalized so the largest coefficient is 1.
    """
    if int(M) != M or M < 2:
        raise ValueError("Chebyshev taper needs M >= 2")
    if not sll_db > 0:
        raise ValueError("sidelobe level must be positive (dB below main lobe)")
    M = int(M)
    order = M - 1
    ratio = 10.0 ** (sll_db / 20.0)
    x0 = np.cosh(np.arccosh(ratio) / order)
    k = np.arange(M)
    samples = chebyshev_polynomial(order, x0 * np.cos(np.pi * k / M)).astype(complex)
    if M % 2 == 0:
        # odd-degree pattern is 2*pi antiperiodic: shift by half a sample
        samples *= np.exp(1j * np.pi * k / M)
    coef = np.real(np.fft.fft(samples))
    if M % 2:
        half = coef[: (M + 1) // 2]
        taper = np.concatenate((half[:0:-1], half))
    else:
        half = coef[1 : M // 2 + 1]
        taper = np.concatenate((half[::-1], half))
    taper = taper / taper.max()
    # enforce exact symmetry against rounding in the transform
    return 0.5 * (taper + taper[::-1])


def steer(taper, geom: ArrayGeometry, phi: float, label: str | None = None) -> WeightVector:
    """Apply a real taper to the steering weights toward ``phi``:
    ``w_m = taper_m * a_m(phi) / M``."""
    taper = np.asarray(taper, dtype=float)
    if taper.size != geom.elements:
        raise ValueError(f"taper length {taper.size} does not match M={geom.elements}")
    if not geom.in_domain(phi):
        raise ValueError("azimuth out of range")
    a = steering_matrix(geom, phi)[:, 0]
    if label is None:
        label = f"steered({np.rad2deg(phi):.3f})"
    return WeightVector(taper * a / geom.elements, label=label)


@dataclass(frozen=True, eq=False)
class BeamGrid:
    """Switched-beam grid: ``K`` steering angles and their weight vectors.

    ``weights`` is ``K x M``; ``hpbw_deg`` is the half-power width of the
    reference beam (steered to the sector centre) used to space the grid.
    """

    geometry: ArrayGeometry
    angles: np.ndarray
    weights: np.ndarray
    sector: tuple[float, float]
    hpbw_deg: float
    taper: np.ndarray
    sll_db: float | None = None

    @property
    def K(self) -> int:
        return self.angles.size

    @property
    def step(self) -> float:
        """Angular spacing between adjacent beams, radians."""
        return (self.sector[1] - self.sector[0]) / self.K

    @property
    def circular(self) -> bool:
        full = np.isclose(self.sector[1] - self.sector[0], 2 * np.pi)
        return bool(self.geometry.circular and full)

    @property
    def beams(self) -> list[tuple[float, WeightVector]]:
        return [
            (float(phi), WeightVector(w, label=f"beam({np.rad2deg(phi):.3f})"))
            for phi, w in zip(self.angles, self.weights)
        ]

    def __len__(self) -> int:
        return self.K


def build_beam_grid(
    geom: ArrayGeometry,
    sll_db: float | None = None,
    sector: tuple[float, float] | None = None,
    n_beams: int | None = None,
) -> BeamGrid:
    """Build the switched-beam grid over ``sector`` (radians).

    With ``sll_db`` set, beams use a Dolph-Chebyshev taper; otherwise uniform
    excitation. ``K = ceil(sector width / HPBW)`` where HPBW is measured on
    the beam steered to the sector centre, and beams sit at
    ``sector[0] + k * width / K``. ``n_beams`` overrides ``K``.
    """
    lo, hi = geom.domain if sector is None else (float(sector[0]), float(sector[1]))
    if not hi > lo:
        raise ValueError("empty sector")
    if not (geom.in_domain(lo) and (geom.in_domain(hi) or np.isclose(hi, geom.domain[1]))):
        raise ValueError("sector outside the azimuth domain")
    M = geom.elements
    taper = chebyshev_weights(M, sll_db) if sll_db is not None else np.ones(M)
    ref = steer(taper, geom, 0.5 * (lo + hi))
    width_deg = np.rad2deg(hi - lo)
    beam_width = hpbw(geom, ref)
    if n_beams is None:
        if width_deg < beam_width:
            raise ValueError(f"sector ({width_deg:.2f} deg) narrower than one HPBW ({beam_width:.2f} deg)")
        n_beams = int(np.ceil(width_deg / beam_width - 1e-9))
    if n_beams < 1:
        raise ValueError("beam grid needs at least one beam")
    angles = lo + np.arange(n_beams) * (hi - lo) / n_beams
    weights = taper[None, :] * steering_matrix(geom, angles).T / M
    return BeamGrid(
        geometry=geom,
        angles=angles,
        weights=weights,
        sector=(lo, hi),
        hpbw_deg=beam_width,
        taper=taper,
        sll_db=sll_db,
    )
