"""Slow, definition-level reference implementations used as test oracles.

Nothing here shares code with the package: the spectrum comes from the
literal O(N^2) DFT sum (no FFT factorization anywhere), the filterbank
is a per-filter if/else loop, the DCT is a cosine-sum matrix, and the
front filter is the quadratic pairwise dominance scan. They exist to
catch vectorization mistakes in the fast pipeline, so keep them naive
on purpose.
"""

import numpy as np


def naive_power_spectrum(frame: np.ndarray, n_fft: int) -> np.ndarray:
    """|DFT|^2 of a zero-padded frame, first n_fft//2 + 1 bins.

    Scalar double loop; use only on short frames.
    """
    padded = np.zeros(n_fft)
    padded[: len(frame)] = frame
    n_bins = n_fft // 2 + 1
    power = np.zeros(n_bins)
    for k in range(n_bins):
        acc = 0.0 + 0.0j
        for n in range(n_fft):
            acc += padded[n] * np.exp(-2j * np.pi * k * n / n_fft)
        power[k] = acc.real**2 + acc.imag**2
    return power


def dft_matrix(n_fft: int) -> np.ndarray:
    """Rows exp(-2*pi*i*k*n/N) for the real-input bins k = 0..N/2."""
    n_bins = n_fft // 2 + 1
    mat = np.zeros((n_bins, n_fft), dtype=np.complex128)
    for k in range(n_bins):
        mat[k] = np.exp(-2j * np.pi * k * np.arange(n_fft) / n_fft)
    return mat


def naive_mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular HTK-mel filters, one explicit triangle at a time."""
    def to_mel(f):
        return 2595.0 * np.log10(1.0 + f / 700.0)

    def to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    nyquist = sample_rate / 2.0
    top = to_mel(nyquist)
    edges = [to_hz(i * top / (n_mels + 1)) for i in range(n_mels + 2)]
    n_bins = n_fft // 2 + 1
    bank = np.zeros((n_mels, n_bins))
    for m in range(n_mels):
        lo, mid, hi = edges[m], edges[m + 1], edges[m + 2]
        for k in range(n_bins):
            f = k * sample_rate / n_fft
            if lo <= f <= mid:
                bank[m, k] = (f - lo) / (mid - lo)
            elif mid < f <= hi:
                bank[m, k] = (hi - f) / (hi - mid)
    return bank


def dct2_ortho_matrix(n: int) -> np.ndarray:
    """Orthonormal type-II DCT as an explicit cosine-sum matrix."""
    mat = np.zeros((n, n))
    for k in range(n):
        scale = np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)
        mat[k] = scale * np.cos(np.pi * k * (2 * np.arange(n) + 1) / (2 * n))
    return mat


def naive_dct2_ortho(vec: np.ndarray) -> np.ndarray:
    n = len(vec)
    out = np.zeros(n)
    for k in range(n):
        acc = 0.0
        for i in range(n):
            acc += vec[i] * np.cos(np.pi * k * (2 * i + 1) / (2 * n))
        scale = np.sqrt(1.0 / n) if k == 0 else np.sqrt(2.0 / n)
        out[k] = scale * acc
    return out


_plan_cache: dict = {}


def naive_mfcc(samples: np.ndarray, sample_rate: int, frame_len=0.025,
               frame_stride=0.010, n_fft=512, n_mels=40, n_coeffs=13,
               log_floor=1e-10) -> np.ndarray:
    """Frame-by-frame MFCC assembled only from the naive pieces above."""
    flen = int(round(frame_len * sample_rate))
    stride = int(round(frame_stride * sample_rate))
    if len(samples) < flen:
        raise ValueError("signal shorter than one frame")
    key = (sample_rate, frame_len, frame_stride, n_fft, n_mels)
    if key not in _plan_cache:
        window = np.array(
            [0.54 - 0.46 * np.cos(2 * np.pi * i / (flen - 1)) for i in range(flen)]
        )
        _plan_cache[key] = (
            window,
            dft_matrix(n_fft),
            naive_mel_filterbank(n_mels, n_fft, sample_rate),
            dct2_ortho_matrix(n_mels),
        )
    window, dft, bank, dct = _plan_cache[key]

    n_frames = (len(samples) - flen) // stride + 1
    out = np.zeros((n_frames, n_coeffs))
    for fi in range(n_frames):
        padded = np.zeros(n_fft)
        padded[:flen] = samples[fi * stride : fi * stride + flen] * window
        spectrum = dft @ padded
        power = spectrum.real**2 + spectrum.imag**2
        energies = np.maximum(bank @ power, log_floor)
        out[fi] = (dct @ np.log(energies))[:n_coeffs]
    return out


def brute_force_front(points: np.ndarray) -> list[int]:
    """Indices of nondominated points under minimization, in input order."""
    points = np.asarray(points, dtype=np.float64)
    keep = []
    for i in range(len(points)):
        dominated = False
        for j in range(len(points)):
            if i == j:
                continue
            if np.all(points[j] <= points[i]) and np.any(points[j] < points[i]):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep
