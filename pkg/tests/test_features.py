import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import adjfree as af
from adjfree.audio import Waveform
from adjfree.features import MfccConfig, hz_to_mel, mel_to_hz

from oracles import (
    dct2_ortho_matrix,
    naive_dct2_ortho,
    naive_mel_filterbank,
    naive_mfcc,
    naive_power_spectrum,
)


class TestMfccConfig:
    def test_defaults(self):
        cfg = af.DEFAULT_MFCC
        assert cfg.frame_samples(16000) == 400
        assert cfg.stride_samples(16000) == 160
        assert cfg.frame_samples(8000) == 200

    def test_validation(self):
        with pytest.raises(ValueError):
            MfccConfig(frame_stride=0.05)  # stride > frame
        with pytest.raises(ValueError):
            MfccConfig(n_fft=500)  # not a power of two
        with pytest.raises(ValueError):
            MfccConfig(n_coeffs=41)  # more coeffs than mels
        with pytest.raises(ValueError):
            MfccConfig(log_floor=0.0)

    def test_frame_longer_than_fft_rejected(self):
        cfg = MfccConfig(n_fft=256)
        w = Waveform(np.zeros(16000), 16000)  # 400-sample frames
        with pytest.raises(ValueError):
            af.mfcc(w, cfg)


class TestMelScale:
    def test_known_point(self):
        assert hz_to_mel(700.0) == pytest.approx(2595.0 * np.log10(2.0))

    @given(st.floats(min_value=0.0, max_value=22050.0))
    def test_inverse(self, f):
        assert mel_to_hz(hz_to_mel(f)) == pytest.approx(f, abs=1e-6)

    @given(st.floats(min_value=0.0, max_value=22000.0), st.floats(min_value=1e-3, max_value=50.0))
    def test_monotone(self, f, df):
        assert hz_to_mel(f + df) > hz_to_mel(f)


class TestMelFilterbank:
    def test_matches_naive(self):
        for rate in (8000, 16000):
            fast = af.mel_filterbank(40, 512, rate)
            slow = naive_mel_filterbank(40, 512, rate)
            assert fast.shape == (40, 257)
            assert np.allclose(fast, slow, atol=1e-12)

    def test_filters_cover_interior_bins(self):
        bank = af.mel_filterbank(40, 512, 16000)
        support = bank.sum(axis=0)
        # every bin between the first and last filter peak is touched
        peaks = [int(np.argmax(bank[m])) for m in (0, 39)]
        assert np.all(support[peaks[0] : peaks[-1] + 1] > 0)

    def test_weights_in_unit_interval(self):
        bank = af.mel_filterbank(40, 512, 8000)
        assert bank.min() >= 0.0
        assert bank.max() <= 1.0 + 1e-12


class TestAgainstOracles:
    def test_power_spectrum_definition(self):
        rng = np.random.default_rng(0)
        frame = rng.uniform(-1, 1, 64)
        fast = np.abs(np.fft.rfft(frame, n=64)) ** 2
        slow = naive_power_spectrum(frame, 64)
        assert np.allclose(fast, slow, atol=1e-9)

    def test_dct_matrix_matches_sum(self):
        rng = np.random.default_rng(1)
        vec = rng.normal(size=16)
        assert np.allclose(dct2_ortho_matrix(16) @ vec, naive_dct2_ortho(vec), atol=1e-12)

    def test_mfcc_matches_naive_pipeline(self):
        rng = np.random.default_rng(2)
        for rate in (8000, 16000):
            samples = rng.uniform(-1, 1, int(rate * 0.12))
            fast = af.mfcc(Waveform(samples, rate))
            slow = naive_mfcc(samples, rate)
            assert fast.shape == slow.shape
            rel = np.linalg.norm(fast - slow) / np.linalg.norm(slow)
            assert rel < 1e-6


class TestMfccShape:
    @given(st.integers(min_value=880, max_value=4000))
    def test_frame_count_formula(self, n):
        w = Waveform(np.zeros(n), 8000)
        feats = af.mfcc(w)
        flen, stride = 200, 80
        assert feats.shape == ((n - flen) // stride + 1, 13)

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            af.mfcc(Waveform(np.zeros(199), 8000))

    def test_deterministic(self):
        rng = np.random.default_rng(3)
        w = Waveform(rng.uniform(-1, 1, 1600), 8000)
        a = af.mfcc(w)
        b = af.mfcc(w)
        assert np.array_equal(a, b)

    def test_silence_is_finite(self):
        feats = af.mfcc(Waveform(np.zeros(1600), 8000))
        assert np.all(np.isfinite(feats))


class TestFeatureDistance:
    def test_identity(self):
        a = np.ones((3, 4))
        assert af.feature_distance(a, a) == 0.0

    def test_known_value(self):
        a = np.zeros((2, 2))
        b = np.ones((2, 2))
        assert af.feature_distance(a, b) == pytest.approx(2.0)
        assert af.feature_distance(a, b, rmse=True) == pytest.approx(1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            af.feature_distance(np.zeros((2, 2)), np.zeros((3, 2)))

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_metric_properties(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = rng.normal(size=(3, 4, 5))
        dab = af.feature_distance(a, b)
        dba = af.feature_distance(b, a)
        assert dab == pytest.approx(dba)
        assert dab >= 0
        assert af.feature_distance(a, c) <= dab + af.feature_distance(b, c) + 1e-9

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_rmse_is_a_fixed_rescale(self, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=(2, 6, 3))
        plain = af.feature_distance(a, b)
        scaled = af.feature_distance(a, b, rmse=True)
        assert scaled == pytest.approx(plain / np.sqrt(a.size))
