"""MFCC feature extraction, the distance the third objective minimizes."""

import numpy as np

import adjfree as af
from adjfree.features import mel_filterbank, hz_to_mel

rate = 8000
cfg = af.MfccConfig()
print(f"frames: {cfg.frame_samples(rate)} samples every {cfg.stride_samples(rate)}, "
      f"{cfg.n_mels} mel filters, {cfg.n_coeffs} coefficients")

# the mel scale compresses high frequencies: equal mel steps, growing Hz steps
for f in (250, 1000, 4000):
    print(f"  {f:>5} Hz -> {hz_to_mel(f):7.1f} mel")

# filterbank rows are triangles that tile the spectrum
bank = mel_filterbank(cfg.n_mels, cfg.n_fft, rate)
print(f"filterbank {bank.shape}, column sums in "
      f"[{bank.sum(axis=0).min():.3f}, {bank.sum(axis=0).max():.3f}]")

t = np.arange(int(0.5 * rate)) / rate
chirp = af.Waveform(0.5 * np.sin(2 * np.pi * (200 * t + 3000 * t**2)), rate)
noise = af.Waveform(np.random.default_rng(0).uniform(-0.5, 0.5, len(t)), rate)

feats = af.mfcc(chirp)
print(f"chirp mfcc matrix: {feats.shape} (frames x coefficients)")

# distances behave like a metric: zero to itself, symmetric, positive apart
print(f"distance chirp->chirp: {af.feature_distance(af.mfcc(chirp), feats):.3f}")
print(f"distance chirp->noise: {af.feature_distance(af.mfcc(noise), feats):.3f}")

# a small additive perturbation moves features a little, not a lot
bump = chirp.samples + np.random.default_rng(1).uniform(-0.05, 0.05, len(t))
d = af.feature_distance(af.mfcc(af.Waveform(np.clip(bump, -1, 1), rate)), feats)
print(f"distance after +-0.05 noise: {d:.3f}")
