"""The built-in surrogate classifier and the subprocess protocol.

The toolkit treats any classifier as a black box that maps a waveform
to a confidence distribution. Two implementations ship with it: a
deterministic template surrogate for experiments without a real model,
and a line-protocol wrapper for external processes.
"""

import numpy as np

import adjfree as af

corpus = af.make_synthetic_corpus(af.DEFAULT_LABELS, duration=0.5, rate=8000, seed=0)
model = af.TemplateClassifier.from_waveforms(corpus)
print(f"surrogate over {len(corpus)} classes, softmax temperature "
      f"{model.temperature:.2f} (auto-calibrated from template spacing)")

target = corpus["no"]
result = af.classify(model, target)
top3 = sorted(result.confidences.items(), key=lambda kv: -kv[1])[:3]
print("clean 'no' clip  ->", ", ".join(f"{k}={v:.3f}" for k, v in top3))

rng = np.random.default_rng(7)
noisy = af.mix_clipped(target, af.Waveform(rng.uniform(-0.1, 0.1, len(target)), 8000))
result = af.classify(model, noisy)
print(f"with +-0.1 noise -> no={result.confidences['no']:.3f} "
      f"(still predicted: {result.predicted!r})")

# an external classifier is any command reading {"id", "wav_path"} JSON
# lines on stdin and answering {"id", "confidences"}; see README for the
# full wire contract. Swap it in with:
#
#   model = af.SubprocessClassifier("python3 my_model.py")
#
# and every downstream function works unchanged.
print("wire protocol: SubprocessClassifier(command) speaks JSON lines over stdin/stdout")
