"""Black-box classification targets.

The attack engine only ever sees per-class confidence scores: anything
with a ``confidences(waveform) -> {label: float}`` method can be
attacked. Two implementations live here:

* :class:`TemplateClassifier` - a deterministic built-in surrogate that
  softmaxes negated MFCC distances to stored per-class templates.
* :class:`SubprocessClassifier` - a bridge to an external model speaking
  a line-oriented JSON protocol over stdin/stdout.

Wire protocol (language neutral): per request the engine writes one line
``{"id": <int>, "wav_path": <path>}`` to the child's stdin, pointing at a
temporary 16-bit mono PCM WAV, and the child replies with one line
``{"id": <int>, "confidences": {"<label>": <float>, ...}}``. Reply
confidences must sum to 1 within 1e-3 (they are renormalized inside that
band, rejected beyond it). One request is in flight per child at a time.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .audio import Waveform, write_wav
from .features import DEFAULT_MFCC, MfccConfig, feature_distance, mfcc

__all__ = [
    "ClassificationResult",
    "ClassifierError",
    "ProtocolError",
    "ClassifierTimeoutError",
    "ClassifierProcessError",
    "classify",
    "TemplateClassifier",
    "SubprocessClassifier",
    "make_synthetic_corpus",
    "DEFAULT_LABELS",
    "TMPDIR_ENV",
]

TMPDIR_ENV = "ADJFREE_TMPDIR"

# Ten command-word classes, alphabetical.
DEFAULT_LABELS = ("down", "go", "left", "no", "off", "on", "right", "stop", "up", "yes")


class ClassifierError(Exception):
    """Base class for failures while querying a black-box model."""


class ProtocolError(ClassifierError):
    """The external classifier sent a malformed or inconsistent reply."""


class ClassifierTimeoutError(ClassifierError):
    """The external classifier did not answer within the per-request timeout."""


class ClassifierProcessError(ClassifierError):
    """The external classifier process is gone or cannot be driven."""


@dataclass(frozen=True)
class ClassificationResult:
    """Per-class confidences plus the predicted label.

    Confidences must sum to 1 within 1e-6. ``predicted`` is the label
    with maximal confidence; exact ties go to the lexicographically
    smallest label so results are reproducible.
    """

    confidences: dict[str, float]
    predicted: str = field(init=False)

    def __post_init__(self):
        confs = {str(k): float(v) for k, v in self.confidences.items()}
        if not confs:
            raise ValueError("confidences must be non-empty")
        values = np.array(list(confs.values()))
        if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
            raise ValueError("confidences must be finite and within [0, 1]")
        total = float(values.sum())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"confidences sum to {total!r}, expected 1 within 1e-6")
        top = max(confs.values())
        predicted = min(k for k, v in confs.items() if v == top)
        object.__setattr__(self, "confidences", confs)
        object.__setattr__(self, "predicted", predicted)


def classify(model, w: Waveform) -> ClassificationResult:
    """Query a black-box model for one waveform.

    Only the returned confidence map is used by the rest of the toolkit;
    no gradients or internals are ever requested.
    """
    return ClassificationResult(dict(model.confidences(w)))


@dataclass(frozen=True, eq=False)
class TemplateClassifier:
    """Deterministic surrogate: softmax over negated MFCC template distances.

    confidence_k = exp(-d_k / temperature) / sum_j exp(-d_j / temperature)
    where d_k is the feature distance between the input's MFCC matrix and
    the stored template for class k. Smooth in the input and honoring the
    black-box contract, which makes it a useful offline stand-in for a
    real speech-command model.

    ``temperature=None`` (the default) derives the softmax scale from the
    templates themselves: a quarter of the median pairwise template
    distance. That keeps confidences informative rather than saturated
    regardless of clip length or sample rate, since feature distances
    grow with the frame count.
    """

    labels: tuple[str, ...]
    templates: tuple[np.ndarray, ...]
    sample_rate: int
    temperature: float | None = None
    mfcc_cfg: MfccConfig = DEFAULT_MFCC

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("need at least 2 labels")
        if len(self.labels) != len(self.templates):
            raise ValueError("one template per label required")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        shapes = {t.shape for t in self.templates}
        if len(shapes) != 1:
            raise ValueError(f"templates must share one shape, got {sorted(shapes)}")
        object.__setattr__(self, "labels", tuple(str(v) for v in self.labels))
        stacked = np.stack([np.asarray(t, dtype=np.float64) for t in self.templates])
        object.__setattr__(self, "_stacked", stacked)
        if self.temperature is None:
            gaps = [
                float(np.linalg.norm(stacked[i] - stacked[j]))
                for i in range(len(stacked))
                for j in range(i + 1, len(stacked))
            ]
            scale = float(np.median(gaps)) / 4.0
            if scale <= 0:
                raise ValueError("templates coincide; pass an explicit temperature")
            object.__setattr__(self, "temperature", scale)
        elif self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @classmethod
    def from_waveforms(
        cls,
        corpus: Mapping[str, Waveform],
        temperature: float | None = None,
        mfcc_cfg: MfccConfig = DEFAULT_MFCC,
    ) -> "TemplateClassifier":
        """Build a surrogate whose templates are the MFCCs of ``corpus``."""
        labels = tuple(sorted(corpus))
        rates = {corpus[k].sample_rate for k in labels}
        if len(rates) != 1:
            raise ValueError("corpus waveforms must share one sample rate")
        templates = tuple(mfcc(corpus[k], mfcc_cfg) for k in labels)
        return cls(labels, templates, rates.pop(), temperature, mfcc_cfg)

    def confidences(self, w: Waveform) -> dict[str, float]:
        if w.sample_rate != self.sample_rate:
            raise ValueError(f"expected {self.sample_rate} Hz input, got {w.sample_rate}")
        feats = mfcc(w, self.mfcc_cfg)
        stacked = self._stacked
        if feats.shape != stacked.shape[1:]:
            raise ValueError(f"input yields {feats.shape} features, templates are {stacked.shape[1:]}")
        dists = np.sqrt(((stacked - feats) ** 2).sum(axis=(1, 2)))
        logits = -dists / self.temperature
        logits -= logits.max()
        weights = np.exp(logits)
        probs = weights / weights.sum()
        return dict(zip(self.labels, probs.tolist()))

    def distances(self, w: Waveform) -> dict[str, float]:
        """Per-class template distances (diagnostic; not used by the attack)."""
        feats = mfcc(w, self.mfcc_cfg)
        return {k: feature_distance(feats, t) for k, t in zip(self.labels, self.templates)}


def make_synthetic_corpus(
    labels,
    duration: float = 1.0,
    rate: int = 16000,
    seed: int = 0,
    tone_count: int = 3,
    noise_amp: float = 0.1,
) -> dict[str, Waveform]:
    """Generate one deterministic, distinct waveform per label.

    Each class is a chord of ``tone_count`` random sines plus a linear
    chirp plus a low uniform noise floor; amplitudes total at most 0.8,
    leaving headroom for an additive perturbation. The same seed and
    label order reproduce the corpus bit for bit.
    """
    labels = [str(v) for v in labels]
    if len(labels) < 2:
        raise ValueError("need at least 2 labels")
    if len(set(labels)) != len(labels):
        raise ValueError("labels must be unique")

    rng = np.random.default_rng(seed)
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    nyquist = rate / 2.0

    corpus = {}
    tone_amp = 0.5 / tone_count
    for label in labels:
        tones = np.zeros(n)
        for _ in range(tone_count):
            freq = rng.uniform(150.0, 0.9 * nyquist)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            tones += tone_amp * np.sin(2.0 * np.pi * freq * t + phase)
        f0 = rng.uniform(150.0, 0.4 * nyquist)
        f1 = rng.uniform(0.5 * nyquist, 0.9 * nyquist)
        sweep = f0 * t + (f1 - f0) * t**2 / (2.0 * duration)
        chirp = 0.2 * np.sin(2.0 * np.pi * sweep + rng.uniform(0.0, 2.0 * np.pi))
        noise = noise_amp * rng.uniform(-1.0, 1.0, size=n)
        corpus[label] = Waveform(tones + chirp + noise, rate)
    return corpus


class SubprocessClassifier:
    """Drive an external classifier process over the JSON line protocol.

    ``command`` is the child command line (string or argv list). Query
    WAVs are exchanged through temporary files in ``tmp_dir`` (default:
    the ADJFREE_TMPDIR environment variable, else the system tmpdir).
    One request is in flight at a time; replies are matched to requests
    by id. After a timeout the child is killed, since its late reply
    could otherwise desynchronize every following request.
    """

    def __init__(self, command, timeout: float = 10.0, tmp_dir=None):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._timeout = timeout
        self._tmp_dir = str(tmp_dir) if tmp_dir else os.environ.get(TMPDIR_ENV, tempfile.gettempdir())
        self._next_id = 0
        self._buf = b""
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0
            )
        except OSError as exc:
            raise ClassifierProcessError(f"cannot start classifier {argv!r}: {exc}") from exc

    def confidences(self, w: Waveform) -> dict[str, float]:
        if self._proc.poll() is not None:
            raise ClassifierProcessError(
                f"classifier process exited with status {self._proc.returncode}"
            )
        req_id = self._next_id
        self._next_id += 1
        wav_path = os.path.join(self._tmp_dir, f"adjfree-{os.getpid()}-{req_id}.wav")
        write_wav(wav_path, w)
        try:
            self._send({"id": req_id, "wav_path": wav_path})
            reply = self._read_reply()
        finally:
            try:
                os.unlink(wav_path)
            except OSError:
                pass
        return self._parse(reply, req_id)

    def _send(self, obj):
        try:
            self._proc.stdin.write((json.dumps(obj) + "\n").encode())
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ClassifierProcessError(f"classifier process not accepting requests: {exc}") from exc

    def _read_reply(self) -> bytes:
        deadline = time.monotonic() + self._timeout
        fd = self._proc.stdout.fileno()
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close()
                raise ClassifierTimeoutError(f"no reply within {self._timeout:g} s")
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ClassifierProcessError("classifier process closed its stdout")
            self._buf += chunk
        line, _, self._buf = self._buf.partition(b"\n")
        return line

    @staticmethod
    def _parse(line: bytes, req_id: int) -> dict[str, float]:
        try:
            reply = json.loads(line)
        except ValueError as exc:
            raise ProtocolError(f"reply is not valid JSON: {line[:200]!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"reply must be a JSON object, got {type(reply).__name__}")
        if reply.get("id") != req_id:
            raise ProtocolError(f"reply id {reply.get('id')!r} does not match request id {req_id}")
        confs = reply.get("confidences")
        if not isinstance(confs, dict) or not confs:
            raise ProtocolError("reply lacks a non-empty 'confidences' object")
        try:
            confs = {str(k): float(v) for k, v in confs.items()}
        except (TypeError, ValueError) as exc:
            raise ProtocolError(f"non-numeric confidence in reply: {exc}") from exc
        values = np.array(list(confs.values()))
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ProtocolError("confidences must be finite and non-negative")
        total = float(values.sum())
        if abs(total - 1.0) > 1e-3:
            raise ProtocolError(f"confidences sum to {total!r}, outside the 1e-3 band around 1")
        return {k: v / total for k, v in confs.items()}

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        proc.terminate()
        try:
            proc.wait(timeout=2.0)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def __del__(self):
        self.close()
