"""Waveform plumbing: wav round trips, circular shifts, clipped mixing.

Everything the attack does to audio reduces to these three operations,
so this walk-through checks their arithmetic by hand.
"""

from pathlib import Path

import numpy as np

import adjfree as af

out = Path("demo_out/01_audio")
out.mkdir(parents=True, exist_ok=True)

rate = 8000
t = np.arange(int(0.5 * rate)) / rate
tone = af.Waveform(0.6 * np.sin(2 * np.pi * 440.0 * t), rate)
print(f"tone: {tone.duration:.2f}s at {tone.sample_rate} Hz, {len(tone)} samples")

# 16-bit PCM round trip loses at most one quantization step
af.write_wav(out / "tone.wav", tone)
back = af.read_wav(out / "tone.wav")
err = np.max(np.abs(back.samples - tone.samples))
print(f"wav round-trip max error: {err:.2e} (one LSB is {1 / 32768:.2e})")

# a circular shift wraps samples instead of padding, so energy is conserved
shifted = af.shift_circular(tone, 0.125)
print(f"shift by 0.125s: energy before {np.sum(tone.samples**2):.3f}, "
      f"after {np.sum(shifted.samples**2):.3f}")

# playback of perturbation over speech = additive mix, clipped to [-1, 1]
loud = af.Waveform(np.full(len(tone), 0.7), rate)
mix = af.mix_clipped(tone, loud)
print(f"clipped mix peak: {np.max(mix.samples):.3f} (raw sum would reach "
      f"{np.max(tone.samples + loud.samples):.3f})")

# the lag schedule is the symmetric grid the attack trains against
schedule = af.default_lag_schedule(0.5, 9)
print(f"default 9-lag schedule over +-0.5s: {[round(l, 3) for l in schedule.lags]}")
