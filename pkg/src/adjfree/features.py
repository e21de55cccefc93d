"""MFCC extraction and feature-space distance.

Pipeline per frame: Hamming window -> magnitude-squared spectrum ->
triangular mel filterbank (HTK scale) -> floored natural log ->
orthonormal type-II DCT truncated to the leading coefficients.

Everything here is deterministic and stateless given a config, so
feature extraction may run concurrently on many candidates.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from .audio import Waveform

__all__ = [
    "MfccConfig",
    "DEFAULT_MFCC",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "mfcc",
    "feature_distance",
]


@dataclass(frozen=True)
class MfccConfig:
    """Framing and filterbank parameters for :func:`mfcc`.

    The 25 ms / 10 ms framing is the usual speech default; all values
    can be overridden. ``log_floor`` bounds mel energies away from zero
    before the log so silence stays finite.
    """

    frame_len: float = 0.025
    frame_stride: float = 0.010
    n_fft: int = 512
    n_mels: int = 40
    n_coeffs: int = 13
    log_floor: float = 1e-10

    def __post_init__(self):
        if not 0 < self.frame_stride <= self.frame_len:
            raise ValueError("need 0 < frame_stride <= frame_len")
        if self.n_fft < 1 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 1 <= self.n_coeffs <= self.n_mels:
            raise ValueError("need 1 <= n_coeffs <= n_mels")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")

    def frame_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_len * sample_rate))

    def stride_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_stride * sample_rate))


DEFAULT_MFCC = MfccConfig()


def hz_to_mel(hz):
    """HTK mel scale: m = 2595 * log10(1 + f/700)."""
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filters spanning 0 Hz to Nyquist.

    Returns an (n_mels, n_fft//2 + 1) weight matrix. Filter m rises
    linearly from mel point m-1 to m and falls to m+1, with the points
    evenly spaced on the mel scale and weights evaluated at the FFT bin
    frequencies.
    """
    mel_points = np.linspace(hz_to_mel(0.0), hz_to_mel(sample_rate / 2.0), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.arange(n_fft // 2 + 1) * (sample_rate / n_fft)

    lo = hz_points[:-2, None]
    mid = hz_points[1:-1, None]
    hi = hz_points[2:, None]
    rising = (bin_freqs - lo) / (mid - lo)
    falling = (hi - bin_freqs) / (hi - mid)
    return np.maximum(0.0, np.minimum(rising, falling))


@lru_cache(maxsize=8)
def _plan(cfg: MfccConfig, sample_rate: int):
    flen = cfg.frame_samples(sample_rate)
    if cfg.n_fft < flen:
        raise ValueError(f"n_fft {cfg.n_fft} shorter than frame of {flen} samples")
    window = np.hamming(flen)
    fbank = mel_filterbank(cfg.n_mels, cfg.n_fft, sample_rate)
    return flen, cfg.stride_samples(sample_rate), window, fbank.T.copy()


def mfcc(w: Waveform, cfg: MfccConfig = DEFAULT_MFCC) -> np.ndarray:
    """Extract MFCC features as a (frames, n_coeffs) float array.

    Frame count is floor((N - frame_len) / stride) + 1; the tail that
    does not fill a frame is dropped, and the signal must cover at least
    one frame.
    """
    flen, stride, window, fbank_t = _plan(cfg, w.sample_rate)
    if len(w) < flen:
        raise ValueError(f"signal of {len(w)} samples shorter than one {flen}-sample frame")

    frames = np.lib.stride_tricks.sliding_window_view(w.samples, flen)[::stride]
    spectrum = np.fft.rfft(frames * window, n=cfg.n_fft, axis=1)
    power = spectrum.real**2 + spectrum.imag**2
    logmel = np.log(np.maximum(power @ fbank_t, cfg.log_floor))
    return scipy.fft.dct(logmel, type=2, norm="ortho", axis=1)[:, : cfg.n_coeffs]


def feature_distance(a: np.ndarray, b: np.ndarray, rmse: bool = False) -> float:
    """Euclidean (Frobenius) norm of the elementwise difference.

    With ``rmse=True`` the norm is divided by sqrt(element count). That
    only rescales the value, so it cannot change how two equal-shape
    candidates compare.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    dist = float(np.linalg.norm(a - b))
    if rmse:
        dist /= np.sqrt(a.size)
    return dist
