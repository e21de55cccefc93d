"""Candidate evaluation: lag-robust confidence statistics plus distortion.

A candidate perturbation is scored by three minimized objectives:

* f1 - mean confidence the model still assigns the correct class, taken
  over every time lag in the schedule;
* f2 - population standard deviation of that confidence over the lags,
  so that low-mean-but-spiky candidates are distinguishable from
  uniformly low ones;
* f3 - feature distance between perturbed and clean audio at zero lag,
  a proxy for how audible the perturbation is.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import LagSchedule, Waveform, mix_clipped, shift_circular
from .classifier import classify
from .features import DEFAULT_MFCC, MfccConfig, feature_distance, mfcc

__all__ = [
    "OBJECTIVE_NAMES",
    "Genome",
    "ObjectiveVector",
    "EvalContext",
    "AdjustFreeReport",
    "random_genome",
    "default_lag_schedule",
    "evaluate",
    "is_adjust_free",
]

OBJECTIVE_NAMES = ("f1", "f2", "f3")


@dataclass(frozen=True, eq=False)
class Genome:
    """Decision variables: one amplitude offset per target sample.

    Offsets are box-constrained to [-bound, +bound]. At 1 s of 16 kHz
    audio this is a 16,000-dimensional search space.
    """

    offsets: np.ndarray
    bound: float

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.float64)
        if offsets.ndim != 1:
            raise ValueError(f"offsets must be 1-D, got shape {offsets.shape}")
        if not np.all(np.isfinite(offsets)):
            raise ValueError("offsets must be finite")
        if self.bound <= 0:
            raise ValueError(f"bound must be positive, got {self.bound}")
        if np.any(np.abs(offsets) > self.bound):
            raise ValueError(f"offsets exceed the box bound {self.bound}")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "bound", float(self.bound))

    def __len__(self):
        return len(self.offsets)

    def as_waveform(self, sample_rate: int) -> Waveform:
        return Waveform(self.offsets, sample_rate)


def random_genome(n: int, bound: float, rng: np.random.Generator) -> Genome:
    """Sample a genome uniformly from the whole box."""
    return Genome(rng.uniform(-bound, bound, size=n), bound)


@dataclass(frozen=True)
class ObjectiveVector:
    """The minimized triple (f1, f2, f3); see the module docstring."""

    f1: float
    f2: float
    f3: float

    def __post_init__(self):
        for name in OBJECTIVE_NAMES:
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def as_array(self, names=OBJECTIVE_NAMES) -> np.ndarray:
        return np.array([getattr(self, n) for n in names], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {n: getattr(self, n) for n in OBJECTIVE_NAMES}


def default_lag_schedule(t_max: float = 0.5, n: int = 9) -> LagSchedule:
    """n evenly spaced lags from -t_max to +t_max inclusive.

    n must be odd (and >= 3) so that lag 0 sits on the grid and the
    schedule stays symmetric.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"n must be odd and >= 3, got {n}")
    half = np.linspace(0.0, t_max, (n + 1) // 2)
    lags = np.concatenate([-half[:0:-1], half])
    return LagSchedule(tuple(lags), t_max)


@dataclass(eq=False)
class EvalContext:
    """Everything needed to score genomes against one target.

    Construction performs a single classification of the clean target to
    pin down the correct label; that query is not metered. ``query_count``
    counts the classifier calls spent by :func:`evaluate` and
    :func:`is_adjust_free` - the black-box search budget.

    With ``randomize_lags=True``, each evaluation draws fresh uniform
    lags in [-t_max, +t_max] from ``rng`` instead of using the fixed
    grid. That matches a perturbation played at a genuinely random
    offset, but it makes objective values noisy, so it is off by default.
    """

    target: Waveform
    model: object
    lag_schedule: LagSchedule = field(default_factory=default_lag_schedule)
    mfcc_cfg: MfccConfig = DEFAULT_MFCC
    rmse_distance: bool = False
    randomize_lags: bool = False
    rng: np.random.Generator | None = None
    query_count: int = field(default=0, init=False)
    correct_label: str = field(init=False)
    clean_confidence: float = field(init=False)

    def __post_init__(self):
        if self.lag_schedule.t_max > self.target.duration:
            raise ValueError("t_max exceeds target duration; lags could not wrap")
        if self.randomize_lags and self.rng is None:
            raise ValueError("randomize_lags requires an rng")
        result = classify(self.model, self.target)
        self.correct_label = result.predicted
        self.clean_confidence = result.confidences[result.predicted]
        self._target_features = mfcc(self.target, self.mfcc_cfg)

    def _lags(self) -> np.ndarray:
        if self.randomize_lags:
            t_max = self.lag_schedule.t_max
            return self.rng.uniform(-t_max, t_max, size=len(self.lag_schedule))
        return np.array(self.lag_schedule.lags)

    def correct_confidence(self, w: Waveform) -> float:
        """Confidence of the correct class for one (already mixed) waveform."""
        self.query_count += 1
        return classify(self.model, w).confidences.get(self.correct_label, 0.0)


def evaluate(g: Genome, ctx: EvalContext) -> ObjectiveVector:
    """Score one genome; spends len(lag_schedule) classifier queries."""
    if len(g) != len(ctx.target):
        raise ValueError(f"genome length {len(g)} != target length {len(ctx.target)}")
    p = g.as_waveform(ctx.target.sample_rate)

    zero_lag_mix = None
    confs = []
    for lag in ctx._lags():
        mixed = mix_clipped(ctx.target, shift_circular(p, lag))
        if lag == 0.0:
            zero_lag_mix = mixed
        confs.append(ctx.correct_confidence(mixed))
    confs = np.array(confs)

    if zero_lag_mix is None:
        zero_lag_mix = mix_clipped(ctx.target, p)
    f3 = feature_distance(
        mfcc(zero_lag_mix, ctx.mfcc_cfg), ctx._target_features, rmse=ctx.rmse_distance
    )
    return ObjectiveVector(float(confs.mean()), float(confs.std()), f3)


@dataclass(frozen=True)
class AdjustFreeReport:
    """Dense-grid robustness curve and the verdict it supports."""

    passed: bool
    lags: tuple[float, ...]
    confidences: tuple[float, ...]
    threshold: float

    @property
    def max_confidence(self) -> float:
        return max(self.confidences)

    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.lags, self.confidences))


def is_adjust_free(
    g: Genome, ctx: EvalContext, dense_n: int = 41, threshold: float = 0.49
) -> AdjustFreeReport:
    """Check a genome on a lag grid denser than the one it was trained on.

    Adjust-free means the correct-class confidence stays below the
    threshold at every lag, so an attacker does not need to time the
    playback at all. Verification uses ``dense_n`` points (odd, at least
    the schedule size) across the same +-t_max range, which catches
    genomes that only fool the model on the sparse optimization grid.
    """
    if dense_n < len(ctx.lag_schedule):
        raise ValueError("dense_n must be at least the optimization schedule size")
    schedule = default_lag_schedule(ctx.lag_schedule.t_max, dense_n)
    p = g.as_waveform(ctx.target.sample_rate)
    confs = tuple(
        ctx.correct_confidence(mix_clipped(ctx.target, shift_circular(p, lag)))
        for lag in schedule
    )
    passed = all(c < threshold for c in confs)
    return AdjustFreeReport(passed, tuple(schedule.lags), confs, threshold)
