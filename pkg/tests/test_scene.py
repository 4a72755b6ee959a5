import math

import numpy as np
import pytest

from aoa_lab.array_model import ArrayGeometry, steering_matrix, steering_vector, uniform_weights
from aoa_lab.numerics import sample_covariance
from aoa_lab.scene import (
    SnapshotMatrix,
    Source,
    beam_output,
    element_noise,
    noise_variance,
    omni_weights,
    source_waveforms,
    synthesize,
    synthesize_noise,
)

ULA8 = ArrayGeometry.ula(8, 0.5)


def test_noiseless_single_source():
    src = Source(1.0)
    X = synthesize(ULA8, [src], 50, math.inf, seed=4)
    s = source_waveforms([src], 50, seed=4)[0]
    np.testing.assert_allclose(X.samples, np.outer(steering_vector(ULA8, 1.0), s), atol=1e-14)
    assert X.noise_variance == 0.0


def test_measured_snr_zero_db():
    g = ArrayGeometry.ula(4, 0.5)
    src = Source(1.2)
    N = 100_000
    X = synthesize(g, [src], N, 0.0, seed=10)
    noise = X.samples - np.outer(steering_vector(g, 1.2), source_waveforms([src], N, 10)[0])
    measured = 10 * np.log10(1.0 / np.mean(np.abs(noise) ** 2, axis=1))
    assert np.all(np.abs(measured) <= 0.1)


def test_replica_waveforms_identical():
    srcs = [Source(1.0), Source(2.0, replica_of=0)]
    S = source_waveforms(srcs, 200, seed=1)
    assert np.array_equal(S[0], S[1])


def test_independent_waveforms_differ():
    S = source_waveforms([Source(1.0), Source(2.0)], 200, seed=1)
    assert abs(np.vdot(S[0], S[1])) / 200 < 0.3


def test_bad_replica_reference():
    with pytest.raises(ValueError):
        source_waveforms([Source(1.0, replica_of=0)], 10, seed=1)


def test_qpsk_constellation():
    s = source_waveforms([Source(1.0, power=4.0, waveform="qpsk")], 64, seed=2)[0]
    np.testing.assert_allclose(np.abs(s), 2.0)
    np.testing.assert_allclose(np.abs(s.real), np.sqrt(2.0))


def test_requires_sources():
    with pytest.raises(ValueError):
        synthesize(ULA8, [], 10, 0.0, seed=0)


def test_source_validation():
    with pytest.raises(ValueError):
        Source(1.0, power=0)
    with pytest.raises(ValueError):
        Source(1.0, waveform="ofdm")
    with pytest.raises(ValueError, match="azimuth out of range"):
        synthesize(ULA8, [Source(4.0)], 10, 0.0, seed=0)


def test_determinism():
    srcs = [Source(0.7), Source(2.1, power=0.5)]
    a = synthesize(ULA8, srcs, 300, -3.0, seed=123)
    b = synthesize(ULA8, srcs, 300, -3.0, seed=123)
    assert np.array_equal(a.samples, b.samples)
    c = synthesize(ULA8, srcs, 300, -3.0, seed=124)
    assert not np.array_equal(a.samples, c.samples)


def test_noise_calibration():
    var = 2.5
    X = synthesize_noise(ULA8, 100_000, var, seed=8)
    R = sample_covariance(X.samples)
    assert np.max(np.abs(R - var * np.eye(8))) <= 0.02 * var


def test_superposition():
    srcs = [Source(0.7), Source(2.1, power=2.0)]
    N, seed, snr = 400, 99, 3.0
    X = synthesize(ULA8, srcs, N, snr, seed)
    S = source_waveforms(srcs, N, seed)
    parts = sum(np.outer(steering_vector(ULA8, s.azimuth), S[i]) for i, s in enumerate(srcs))
    V = element_noise(8, N, noise_variance(srcs, snr), seed, len(srcs))
    np.testing.assert_allclose(X.samples, parts + V, atol=1e-12)


def test_noise_variance_definition():
    srcs = [Source(1.0, power=1.0), Source(2.0, power=3.0)]
    assert noise_variance(srcs, 10.0) == pytest.approx(0.4)
    assert noise_variance(srcs, math.inf) == 0.0


def test_snapshot_matrix_validation():
    with pytest.raises(ValueError):
        SnapshotMatrix(np.zeros((2, 0)))
    with pytest.raises(ValueError):
        SnapshotMatrix(np.array([[np.nan]]))


# --- beam_output -------------------------------------------------------------


def test_beam_output_basis_vector():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((8, 20)) + 1j * rng.standard_normal((8, 20))
    e0 = np.zeros(8)
    e0[0] = 1
    np.testing.assert_allclose(beam_output(X, e0), X[0])


def test_beam_output_recovers_waveform():
    src = Source(1.3)
    X = synthesize(ULA8, [src], 64, math.inf, seed=5)
    y = beam_output(X, uniform_weights(ULA8, 1.3))
    np.testing.assert_allclose(y, source_waveforms([src], 64, 5)[0], atol=1e-13)


def test_beam_output_matches_loop():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((8, 30)) + 1j * rng.standard_normal((8, 30))
    w = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    naive = np.array([sum(np.conj(w[m]) * X[m, n] for m in range(8)) for n in range(30)])
    np.testing.assert_allclose(beam_output(X, w), naive, atol=1e-12)


def test_beam_output_stack():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((8, 30)) + 0j
    W = steering_matrix(ULA8, [0.3, 1.0, 2.0]).T / 8
    Y = beam_output(X, W)
    assert Y.shape == (3, 30)
    np.testing.assert_allclose(Y[1], beam_output(X, W[1]))


def test_beam_output_dimension_mismatch():
    with pytest.raises(ValueError):
        beam_output(np.zeros((8, 3)), np.ones(7))


# --- omni_weights ------------------------------------------------------------


def test_omni_five_of_seventeen():
    w = omni_weights(ArrayGeometry.ula(17, 0.5), 5).weights
    assert list(np.flatnonzero(w)) == [0, 4, 8, 12, 16]
    np.testing.assert_allclose(w[w != 0], 0.2)


def test_omni_single_centre():
    w = omni_weights(ArrayGeometry.ula(17, 0.5), 1).weights
    assert list(np.flatnonzero(w)) == [8]


def test_omni_uca_diametric():
    g = ArrayGeometry.uca(16)
    idx = np.flatnonzero(omni_weights(g, 2).weights)
    assert len(idx) == 2
    ang = 2 * np.pi * (idx + 1) / 16
    assert abs(abs(ang[1] - ang[0]) - np.pi) < 1e-12


def test_omni_infeasible_reports_maximum():
    with pytest.raises(ValueError, match="maximum is 5"):
        omni_weights(ArrayGeometry.ula(17, 0.5), 6)
    with pytest.raises(ValueError, match="maximum is 2"):
        omni_weights(ArrayGeometry.uca(16), 3)


def test_omni_spacing_at_least_two_wavelengths():
    g = ArrayGeometry.ula(23, 0.5)
    idx = np.flatnonzero(omni_weights(g, 4).weights)
    assert np.all(np.diff(idx) * g.spacing >= 2.0)
    # centred on the array to within one element
    assert abs(idx[0] - ((g.elements - 1) - idx[-1])) <= 1
