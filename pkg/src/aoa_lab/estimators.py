"""Bartlett, Capon, MUSIC and switched-beam cross-correlation spectra, plus
peak picking and the peak-to-floor ratio (PFR)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, WeightVector, steering_matrix, uniform_hpbw
from .chebyshev import BeamGrid
from .errors import NumericalError
from .numerics import hermitian_eig, hermitize, solve_hermitian
from .scene import SnapshotMatrix, beam_output
from .spectrum import Spectrum

MUSIC_FLOOR = 1e-12


def _prepare(R, geom: ArrayGeometry, grid):
    R = hermitize(R)
    if R.shape[0] != geom.elements:
        raise ValueError(f"covariance is {R.shape[0]}x{R.shape[0]} but array has M={geom.elements}")
    grid = geom.default_grid() if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty azimuth grid")
    if not np.all(geom.in_domain(grid)):
        raise ValueError("azimuth out of range")
    return R, grid, steering_matrix(geom, grid)


def _quadratic(A: np.ndarray, B: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Column-wise ``a^H b`` with a real-part check."""
    q = np.einsum("mg,mg->g", A.conj(), B)
    scale = np.max(np.abs(q.real)) if q.size else 0.0
    if np.any(np.abs(q.imag) > tol * max(scale, np.finfo(float).tiny)):
        raise NumericalError("quadratic form is not real; covariance is not Hermitian")
    return q.real


def bartlett(R, geom: ArrayGeometry, grid=None) -> Spectrum:
    """Delay-and-sum spectrum ``a^H R a``."""
    R, grid, A = _prepare(R, geom, grid)
    values = np.maximum(_quadratic(A, R @ A), 0.0)
    return Spectrum(grid, values, "bartlett", {}, geom.circular, geom)


def default_ridge(R) -> float:
    R = np.asarray(R)
    return 1e-10 * float(np.real(np.trace(R))) / R.shape[0]


def capon(R, geom: ArrayGeometry, grid=None, ridge: float | None = None) -> Spectrum:
    """MVDR spectrum ``1 / (a^H (R + ridge I)^-1 a)``.

    The default ridge, ``1e-10 * tr(R) / M``, keeps noiseless rank-deficient
    covariances solvable without visibly changing noisy spectra.
    """
    R, grid, A = _prepare(R, geom, grid)
    if ridge is None:
        ridge = default_ridge(R)
    Y = solve_hermitian(R, A, ridge)
    # rounding in the solve leaves imaginary parts of order cond * eps
    cond = np.linalg.cond(R + ridge * np.eye(R.shape[0]))
    denom = _quadratic(A, Y, max(1e-9, 1e3 * np.finfo(float).eps * cond))
    if np.any(denom <= 0):
        raise NumericalError("singular covariance")
    return Spectrum(grid, 1.0 / denom, "capon", {"ridge": ridge}, geom.circular, geom)


def noise_projector(R, n_sources: int) -> np.ndarray:
    """``U_v U_v^H`` for the ``M - n_sources`` smallest eigenvalues."""
    M = np.asarray(R).shape[0]
    if not 1 <= n_sources < M:
        raise ValueError(f"n_sources must satisfy 1 <= n_sources < M={M}")
    Uv = hermitian_eig(R).eigenvectors[:, n_sources:]
    return Uv @ Uv.conj().T


def music(R, geom: ArrayGeometry, grid=None, n_sources: int = 1) -> Spectrum:
    """MUSIC pseudo-spectrum ``1 / (a^H P_v a)`` with the denominator
    floored at ``1e-12 * M``."""
    R, grid, A = _prepare(R, geom, grid)
    if not 1 <= n_sources < geom.elements:
        raise ValueError(f"n_sources must satisfy 1 <= n_sources < M={geom.elements}")
    Uv = hermitian_eig(R).eigenvectors[:, n_sources:]
    denom = np.sum(np.abs(Uv.conj().T @ A) ** 2, axis=0)
    denom = np.maximum(denom, MUSIC_FLOOR * geom.elements)
    return Spectrum(grid, 1.0 / denom, "music", {"n_sources": n_sources}, geom.circular, geom)


def _beam_streams(X, beam_grid: BeamGrid, omni):
    samples = X.samples if isinstance(X, SnapshotMatrix) else np.asarray(X, dtype=np.complex128)
    if beam_grid.K == 0:
        raise ValueError("empty beam grid")
    if samples.shape[0] != beam_grid.geometry.elements:
        raise ValueError("beam grid does not match the snapshot array size")
    xo = beam_output(samples, omni)
    Y = beam_output(samples, beam_grid.weights)
    return Y, xo


def cross_correlation(X, beam_grid: BeamGrid, omni: WeightVector) -> np.ndarray:
    """Complex ``R_ko = (1/N) sum_n y_k(n) conj(x_o(n))`` for every beam."""
    Y, xo = _beam_streams(X, beam_grid, omni)
    return (Y @ xo.conj()) / xo.size


def correlation_coefficients(X, beam_grid: BeamGrid, omni: WeightVector) -> np.ndarray:
    """``|R_ko| / (rms(y_k) rms(x_o))``, each in ``[0, 1]``."""
    Y, xo = _beam_streams(X, beam_grid, omni)
    r = np.abs(Y @ xo.conj()) / xo.size
    rms_y = np.sqrt(np.mean(np.abs(Y) ** 2, axis=1))
    rms_o = np.sqrt(np.mean(np.abs(xo) ** 2))
    denom = rms_y * rms_o
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(denom > 0, r / denom, 0.0)
    return np.minimum(rho, 1.0)


def xsbs(X, beam_grid: BeamGrid, omni: WeightVector) -> Spectrum:
    """Switched-beam cross-correlation profile ``|R_ko|`` over the beam
    angles. The omni-reference stream and all beam streams are read from the
    same snapshots."""
    values = np.abs(cross_correlation(X, beam_grid, omni))
    params = {
        "K": beam_grid.K,
        "sll_db": beam_grid.sll_db,
        "beam_step_deg": float(np.rad2deg(beam_grid.step)),
        "hpbw_deg": beam_grid.hpbw_deg,
        "omni": omni.label,
    }
    return Spectrum(beam_grid.angles, values, "xsbs", params, beam_grid.circular, beam_grid.geometry)


@dataclass(frozen=True, eq=False)
class AoAEstimate:
    """Detected azimuths (radians, strongest first) and the spectrum PFR."""

    angles: np.ndarray
    pfr_db: float
    floor: float
    spectrum: Spectrum

    @property
    def angles_deg(self) -> np.ndarray:
        return np.rad2deg(self.angles)


def angular_distance_deg(a, b, circular: bool) -> np.ndarray:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.minimum(d, 360.0 - d) if circular else d


def _local_maxima(v: np.ndarray, circular: bool) -> np.ndarray:
    if v.size == 1:
        return np.array([0])
    if circular:
        left, right = np.roll(v, 1), np.roll(v, -1)
    else:
        left = np.r_[-np.inf, v[:-1]]
        right = np.r_[v[1:], -np.inf]
    return np.flatnonzero((v > left) & (v >= right))


def _exclusion_deg(spec: Spectrum, peak_deg: float) -> float:
    if spec.estimator == "xsbs":
        return float(spec.params.get("beam_step_deg", np.rad2deg(np.min(np.diff(spec.angles)))))
    if spec.geometry is None:
        return 0.0
    try:
        return uniform_hpbw(spec.geometry, round(float(peak_deg), 6))
    except ValueError:
        return 0.0


def _floor(spec: Spectrum, deg: np.ndarray, peaks: list[int], exclusion) -> float:
    keep = np.ones(deg.size, dtype=bool)
    for i in peaks:
        width = exclusion if exclusion is not None else _exclusion_deg(spec, deg[i])
        keep &= angular_distance_deg(deg, deg[i], spec.circular) > width + 1e-9
    rest = spec.values[keep] if np.any(keep) else spec.values
    return float(np.median(rest))


def detect_peaks(
    spec: Spectrum,
    min_separation: float = 0.0,
    threshold_db: float = 3.0,
    exclusion: float | None = None,
) -> AoAEstimate:
    """Pick spectral peaks and measure the peak-to-floor ratio.

    Local maxima standing more than ``threshold_db`` above the floor are kept
    greedily, strongest first, subject to ``min_separation`` (degrees). The
    floor is the median of the spectrum outside a ``+/- exclusion`` degree
    zone around every kept peak; by default the zone is one HPBW of the
    array's uniform beam at that peak, or one beam step for the XSBS profile.
    PFR is ``10 log10(max / floor)``.
    """
    v = spec.values
    peak = float(v.max())
    if peak <= 0:
        raise ValueError("degenerate spectrum")
    deg = spec.angles_deg
    top = int(np.argmax(v))
    floor = _floor(spec, deg, [top], exclusion)
    level = max(floor, 0.0) * 10.0 ** (threshold_db / 10.0)

    candidates = [int(i) for i in _local_maxima(v, spec.circular) if v[i] > level]
    candidates.sort(key=lambda i: -v[i])
    kept: list[int] = []
    for i in candidates:
        if all(angular_distance_deg(deg[i], deg[j], spec.circular) >= min_separation for j in kept):
            kept.append(i)

    if kept:
        floor = _floor(spec, deg, kept, exclusion)
    floor = max(floor, peak * 1e-30)
    pfr = 10.0 * np.log10(peak / floor)
    return AoAEstimate(spec.angles[kept], float(pfr), floor, spec)
