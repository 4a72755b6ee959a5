import math

import numpy as np
import pytest

from aoa_lab.array_model import ArrayGeometry, steering_matrix, steering_vector, uniform_hpbw
from aoa_lab.chebyshev import build_beam_grid
from aoa_lab.estimators import (
    bartlett,
    capon,
    correlation_coefficients,
    detect_peaks,
    music,
    noise_projector,
    xsbs,
)
from aoa_lab.numerics import sample_covariance
from aoa_lab.scene import Source, omni_weights, synthesize, synthesize_noise
from aoa_lab.spectrum import Spectrum

UCA16 = ArrayGeometry.uca(16)
ULA17 = ArrayGeometry.ula(17, 0.5)


def argmax_deg(spec):
    return float(spec.angles_deg[np.argmax(spec.values)])


# --- Bartlett ---------------------------------------------------------------


def test_bartlett_rank_one():
    g = ArrayGeometry.ula(8, 0.5)
    phi0 = np.deg2rad(70.0)
    a = steering_vector(g, phi0)
    spec = bartlett(np.outer(a, a.conj()), g)
    assert argmax_deg(spec) == pytest.approx(70.0)
    assert spec.values.max() == pytest.approx(64.0)


def test_bartlett_identity_flat():
    spec = bartlett(np.eye(8), ArrayGeometry.ula(8, 0.5))
    np.testing.assert_allclose(spec.values, 8.0)


def test_bartlett_dimension_mismatch():
    with pytest.raises(ValueError):
        bartlett(np.eye(4), ArrayGeometry.ula(8, 0.5))


def majority_argmax(fn, snr=0.0, seeds=range(20), **kw):
    hits = 0
    for s in seeds:
        X = synthesize(UCA16, [Source(np.pi)], 1000, snr, seed=s)
        spec = fn(sample_covariance(X.samples), UCA16, **kw)
        hits += abs(argmax_deg(spec) - 180.0) <= 0.5
    return hits


def test_bartlett_uca_monte_carlo():
    assert majority_argmax(bartlett) > 10


# --- Capon ------------------------------------------------------------------


def test_capon_identity_flat():
    spec = capon(np.eye(8), ArrayGeometry.ula(8, 0.5))
    np.testing.assert_allclose(spec.values, 1 / 8)


def test_capon_uca_monte_carlo_and_narrower_lobe():
    assert majority_argmax(capon) > 10
    X = synthesize(UCA16, [Source(np.pi)], 1000, 0.0, seed=3)
    R = sample_covariance(X.samples)

    def width(spec):
        v = spec.values / spec.values.max()
        return np.count_nonzero(v >= 0.5)

    assert width(capon(R, UCA16)) < width(bartlett(R, UCA16))


def test_capon_noiseless_rank_deficient_uses_ridge():
    a = steering_vector(UCA16, 1.0)
    spec = capon(np.outer(a, a.conj()), UCA16)
    assert spec.params["ridge"] > 0
    assert argmax_deg(spec) == pytest.approx(np.rad2deg(1.0), abs=0.5)


def test_capon_two_sources_resolved():
    srcs = [Source(np.pi), Source(np.deg2rad(200))]
    X = synthesize(UCA16, srcs, 1000, 0.0, seed=1)
    est = detect_peaks(capon(sample_covariance(X.samples), UCA16))
    assert sorted(np.round(est.angles_deg[:2])) == pytest.approx([180, 200], abs=2)


# --- MUSIC ------------------------------------------------------------------


def test_music_noiseless_null():
    a = steering_vector(UCA16, 2.0)
    R = np.outer(a, a.conj())
    Pv = noise_projector(R, 1)
    assert np.real(a.conj() @ Pv @ a) <= 1e-9 * 16


def test_music_noiseless_three_sources():
    g = ArrayGeometry.ula(8, 0.5)
    rng = np.random.default_rng(4)
    angles = np.deg2rad([35.0, 80.0, 130.0]) + rng.uniform(-0.05, 0.05, 3)
    A = steering_matrix(g, angles)
    R = A @ np.diag([1.0, 2.0, 0.5]) @ A.conj().T
    Pv = noise_projector(R, 3)
    for k in range(3):
        assert np.real(A[:, k].conj() @ Pv @ A[:, k]) <= 1e-8 * 8


def test_music_requires_fewer_sources_than_elements():
    with pytest.raises(ValueError):
        music(np.eye(4), ArrayGeometry.ula(4, 0.5), n_sources=4)


@pytest.mark.parametrize("snr, lo, hi", [(0.0, 22.0, 40.0), (-15.0, 8.0, 18.0)])
def test_music_pfr_uca(snr, lo, hi):
    X = synthesize(UCA16, [Source(np.pi)], 1000, snr, seed=0)
    est = detect_peaks(music(sample_covariance(X.samples), UCA16))
    assert lo <= est.pfr_db <= hi


def test_estimators_agree_on_strong_source():
    votes = 0
    for s in range(20):
        X = synthesize(UCA16, [Source(np.deg2rad(123.0))], 1000, 10.0, seed=s)
        R = sample_covariance(X.samples)
        peaks = {argmax_deg(f(R, UCA16)) for f in (bartlett, capon, music)}
        votes += len(peaks) == 1
    assert votes > 10


def test_argmax_and_pfr_scale_invariant():
    X = synthesize(UCA16, [Source(1.0)], 500, 0.0, seed=2)
    R = sample_covariance(X.samples)
    for fn in (bartlett, capon, music):
        e1 = detect_peaks(fn(R, UCA16))
        e2 = detect_peaks(fn(7.5 * R, UCA16))
        assert argmax_deg(e1.spectrum) == argmax_deg(e2.spectrum)
        assert abs(e1.pfr_db - e2.pfr_db) <= 1e-9


# --- XSBS -------------------------------------------------------------------


def xsbs_setup():
    bg = build_beam_grid(ULA17, 15.0)
    return bg, omni_weights(ULA17, 5)


def test_xsbs_noiseless_peak_at_beam():
    bg, omni = xsbs_setup()
    X = synthesize(ULA17, [Source(np.pi / 2)], 1000, math.inf, seed=1)
    spec = xsbs(X, bg, omni)
    assert argmax_deg(spec) == pytest.approx(90.0)
    norm = spec.values / spec.values.max()
    assert norm.max() == 1.0 and norm.min() >= 0.0
    rho = correlation_coefficients(X, bg, omni)
    assert rho[np.argmax(spec.values)] == pytest.approx(1.0, abs=1e-9)


def test_xsbs_scale_invariance():
    bg, omni = xsbs_setup()
    X = synthesize(ULA17, [Source(np.pi / 2)], 500, 0.0, seed=3)
    e1 = detect_peaks(xsbs(X.samples, bg, omni))
    e2 = detect_peaks(xsbs(3.0 * X.samples, bg, omni))
    assert argmax_deg(e1.spectrum) == argmax_deg(e2.spectrum)
    assert abs(e1.pfr_db - e2.pfr_db) <= 1e-9


def test_xsbs_spectrum_on_beam_angles():
    bg, omni = xsbs_setup()
    X = synthesize(ULA17, [Source(1.0)], 100, 10.0, seed=0)
    spec = xsbs(X, bg, omni)
    np.testing.assert_array_equal(spec.angles, bg.angles)
    assert spec.params["K"] == 32


def test_xsbs_mismatched_array():
    bg, omni = xsbs_setup()
    X = synthesize(ArrayGeometry.ula(16, 0.5), [Source(1.0)], 10, 0.0, seed=0)
    with pytest.raises(ValueError):
        xsbs(X, bg, omni)


def test_xsbs_replica_sources_resolved_on_uca():
    g = ArrayGeometry.uca(44)
    bg = build_beam_grid(g)
    omni = omni_weights(g, 2)
    srcs = [Source(np.pi), Source(np.deg2rad(192), replica_of=0)]
    X = synthesize(g, srcs, 1000, -15.0, seed=0)
    est = detect_peaks(xsbs(X, bg, omni))
    assert sorted(est.angles_deg[:2]) == pytest.approx([180, 192], abs=3.5)


def test_xsbs_shared_noise_bias_points_broadside():
    # With the omni reference and beams read from the same element noise,
    # E[R_ko] = sigma^2 w_k^H w_o even without any source. For the 5-element
    # omni at 2-wavelength spacing that bias peaks at broadside.
    bg, omni = xsbs_setup()
    X = synthesize_noise(ULA17, 20000, 1.0, seed=6)
    spec = xsbs(X, bg, omni)
    assert argmax_deg(spec) == pytest.approx(90.0)
    expected = np.abs(bg.weights.conj() @ omni.weights)
    np.testing.assert_allclose(spec.values, expected, atol=0.01)


# --- detect_peaks -----------------------------------------------------------


def make_spec(values, step=1.0, circular=False):
    angles = np.deg2rad(np.arange(len(values)) * step)
    return Spectrum(angles, np.asarray(values, float), "test", circular=circular)


def test_triangle_single_peak():
    v = np.r_[np.arange(1, 11), np.arange(9, 0, -1)].astype(float)
    est = detect_peaks(make_spec(v), exclusion=0.0)
    assert est.angles_deg.tolist() == [9.0]
    rest = np.delete(v, 9)
    assert est.pfr_db == pytest.approx(10 * np.log10(10 / np.median(rest)))


def test_flat_spectrum_no_peaks():
    est = detect_peaks(make_spec(np.ones(50)))
    assert est.angles.size == 0
    assert est.pfr_db == pytest.approx(0.0)


def test_two_bumps_recovered():
    x = np.arange(0, 180, 0.5)
    v = 1 + 50 * np.exp(-0.5 * ((x - 60.25) / 3) ** 2) + 20 * np.exp(-0.5 * ((x - 121.0) / 3) ** 2)
    est = detect_peaks(make_spec(v, 0.5), exclusion=10.0)
    assert len(est.angles) == 2
    assert est.angles_deg[0] == pytest.approx(60.25, abs=0.5)
    assert est.angles_deg[1] == pytest.approx(121.0, abs=0.5)


def test_min_separation_suppresses_weaker_peak():
    x = np.arange(0, 180, 0.5)
    v = 1 + 50 * np.exp(-0.5 * ((x - 60) / 2) ** 2) + 20 * np.exp(-0.5 * ((x - 70) / 2) ** 2)
    est = detect_peaks(make_spec(v, 0.5), min_separation=15.0, exclusion=5.0)
    assert est.angles_deg == pytest.approx([60.0])


def test_circular_wraparound_peak():
    v = np.ones(360)
    v[0], v[1], v[359] = 10.0, 5.0, 5.0
    est = detect_peaks(make_spec(v, circular=True), exclusion=2.0)
    assert est.angles_deg.tolist() == [0.0]


def test_degenerate_spectrum():
    with pytest.raises(ValueError, match="degenerate spectrum"):
        detect_peaks(make_spec(np.zeros(10)))


def test_default_exclusion_uses_hpbw():
    X = synthesize(UCA16, [Source(np.pi)], 1000, 0.0, seed=0)
    spec = music(sample_covariance(X.samples), UCA16)
    est = detect_peaks(spec)
    width = uniform_hpbw(UCA16, 180.0)
    keep = np.abs(spec.angles_deg - 180.0) > width + 1e-9
    assert est.floor == pytest.approx(np.median(spec.values[keep]))
