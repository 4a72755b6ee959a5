"""Snapshot synthesis and beam-port combining.

Every trial draws its waveforms and receiver noise from child streams of one
``numpy.random.SeedSequence``: child ``0`` feeds the element noise and child
``i + 1`` feeds source ``i``. Synthesis is therefore bit-for-bit repeatable
given the seed, and the pieces can be regenerated separately (see
``source_waveforms`` and ``element_noise``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .array_model import ArrayGeometry, WeightVector, steering_matrix

WAVEFORMS = ("complex-gaussian", "qpsk")


@dataclass(frozen=True)
class Source:
    """Far-field narrowband emitter.

    ``replica_of`` names the index of another source whose waveform this one
    repeats sample-for-sample (coherent multipath-like pair); ``None`` means
    an independent waveform.
    """

    azimuth: float
    power: float = 1.0
    waveform: str = "complex-gaussian"
    replica_of: int | None = None

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError("source power must be positive")
        if self.waveform not in WAVEFORMS:
            raise ValueError(f"unknown waveform {self.waveform!r}")


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """``M x N`` element samples plus the seed that produced them."""

    samples: np.ndarray
    seed: int | None = None
    noise_variance: float = 0.0

    def __post_init__(self):
        X = np.asarray(self.samples, dtype=np.complex128)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError(f"snapshot matrix must be non-empty 2-D, got {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValueError("snapshot matrix has non-finite entries")
        object.__setattr__(self, "samples", X)

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[1]


def _streams(seed: int, n_sources: int) -> list[np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(n_sources + 1)
    return [np.random.default_rng(c) for c in children]


def _cgauss(rng: np.random.Generator, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def _draw(rng: np.random.Generator, kind: str, N: int) -> np.ndarray:
    if kind == "qpsk":
        bits = rng.integers(0, 2, size=(2, N))
        return ((2 * bits[0] - 1) + 1j * (2 * bits[1] - 1)) / np.sqrt(2.0)
    return _cgauss(rng, N)


def source_waveforms(sources, N: int, seed: int) -> np.ndarray:
    """``S x N`` waveforms, each with mean power equal to its source power."""
    sources = list(sources)
    if N < 1:
        raise ValueError("need at least one snapshot")
    rngs = _streams(seed, len(sources))
    unit = np.empty((len(sources), N), dtype=np.complex128)
    for i, src in enumerate(sources):
        unit[i] = _draw(rngs[i + 1], src.waveform, N)
    for i, src in enumerate(sources):
        ref = src.replica_of
        if ref is None:
            continue
        if not 0 <= ref < len(sources) or ref == i or sources[ref].replica_of is not None:
            raise ValueError(f"source {i}: invalid replica reference {ref}")
        unit[i] = unit[ref]
    powers = np.array([s.power for s in sources])
    return np.sqrt(powers)[:, None] * unit


def element_noise(M: int, N: int, variance: float, seed: int, n_sources: int) -> np.ndarray:
    """Per-element circular complex AWGN realization used by ``synthesize``."""
    rng = _streams(seed, n_sources)[0]
    return np.sqrt(variance) * _cgauss(rng, (M, N))


def noise_variance(sources, snr_db: float) -> float:
    """Per-element noise variance: total source power over linear SNR."""
    if math.isinf(snr_db) and snr_db > 0:
        return 0.0
    return sum(s.power for s in sources) / 10.0 ** (snr_db / 10.0)


def synthesize(geom: ArrayGeometry, sources, N: int, snr_db: float, seed: int) -> SnapshotMatrix:
    """Element-level snapshots ``x(n) = sum_i a(phi_i) s_i(n) + v(n)``.

    Noise is white, circular and independent across elements, with variance
    ``sum(power) / 10**(snr_db/10)``. ``snr_db = inf`` disables noise.
    """
    sources = list(sources)
    if not sources:
        raise ValueError("at least one source is required")
    if N < 1:
        raise ValueError("need at least one snapshot")
    az = np.array([s.azimuth for s in sources], dtype=float)
    if not np.all(geom.in_domain(az)):
        raise ValueError("azimuth out of range")
    S = source_waveforms(sources, N, seed)
    X = steering_matrix(geom, az) @ S
    var = noise_variance(sources, snr_db)
    if var > 0:
        X = X + element_noise(geom.elements, N, var, seed, len(sources))
    return SnapshotMatrix(X, seed=seed, noise_variance=var)


def synthesize_noise(geom: ArrayGeometry, N: int, variance: float, seed: int) -> SnapshotMatrix:
    """Noise-only snapshots (no sources), for calibration checks."""
    if N < 1:
        raise ValueError("need at least one snapshot")
    X = element_noise(geom.elements, N, variance, seed, 0)
    return SnapshotMatrix(X, seed=seed, noise_variance=variance)


def beam_output(X, w) -> np.ndarray:
    """Beam-port stream ``y(n) = w^H x(n)``.

    ``w`` may be a single weight vector or a ``K x M`` stack, giving ``K x N``.
    """
    samples = X.samples if isinstance(X, SnapshotMatrix) else np.asarray(X, dtype=np.complex128)
    wv = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.complex128)
    if wv.shape[-1] != samples.shape[0]:
        raise ValueError(f"weights have {wv.shape[-1]} elements, snapshots have {samples.shape[0]}")
    return wv.conj() @ samples


def max_omni_count(geom: ArrayGeometry, min_separation: float = 2.0) -> int:
    if geom.kind == "uca":
        return 2
    stride = int(math.ceil(min_separation / geom.spacing - 1e-9))
    return (geom.elements - 1) // stride + 1


def omni_weights(geom: ArrayGeometry, count: int, min_separation: float = 2.0) -> WeightVector:
    """Omni-directional reference: ``count`` widely separated elements with
    gain ``1/count`` each, every other element switched off.

    ULA elements are spread as far apart as the aperture allows (at least
    ``min_separation`` wavelengths) and centred on the array. A UCA supports
    at most two, taken diametrically opposite.
    """
    M = geom.elements
    limit = max_omni_count(geom, min_separation)
    if int(count) != count or count < 1 or count > limit:
        raise ValueError(f"omni element count {count} infeasible for {geom.describe()}; maximum is {limit}")
    count = int(count)
    if geom.kind == "ula":
        if count == 1:
            idx = [(M - 1) // 2]
        else:
            stride = (M - 1) // (count - 1)
            offset = ((M - 1) - stride * (count - 1)) // 2
            idx = [offset + stride * i for i in range(count)]
    else:
        idx = [M - 1] if count == 1 else [M // 2 - 1, M - 1]
    w = np.zeros(M, dtype=np.complex128)
    w[idx] = 1.0 / count
    return WeightVector(w, label=f"omni({count})")
