"""Adjust-free adversarial audio: lag-robust black-box attacks.

The package searches for bounded waveform perturbations that keep a
classifier's correct-class confidence low at every playback lag within
a window, using decomposition-based multi-objective evolution against
any black-box model that reports per-class confidences.

Typical flow: load a target with :func:`read_wav`, pick a classifier
(the builtin :class:`TemplateClassifier` surrogate or an external
:class:`SubprocessClassifier`), call :func:`run` with a
:class:`RunConfig`, then verify archive entries with
:func:`is_adjust_free`.
"""

from .audio import (
    LagSchedule,
    UnsupportedWavError,
    WavFormatError,
    Waveform,
    mix_clipped,
    read_wav,
    shift_circular,
    write_wav,
)
from .features import (
    DEFAULT_MFCC,
    MfccConfig,
    feature_distance,
    mel_filterbank,
    mfcc,
)
from .classifier import (
    DEFAULT_LABELS,
    ClassificationResult,
    ClassifierError,
    ClassifierProcessError,
    ClassifierTimeoutError,
    ProtocolError,
    SubprocessClassifier,
    TemplateClassifier,
    classify,
    make_synthetic_corpus,
)
from .objectives import (
    OBJECTIVE_NAMES,
    AdjustFreeReport,
    EvalContext,
    Genome,
    ObjectiveVector,
    default_lag_schedule,
    evaluate,
    is_adjust_free,
    random_genome,
)
from .moead import (
    ArchiveEntry,
    GenerationSnapshot,
    GenerationStats,
    ParetoArchive,
    RunAborted,
    RunConfig,
    RunResult,
    Subproblem,
    build_weights,
    de_crossover,
    dominates,
    load_checkpoint,
    neighborhoods,
    polynomial_mutation,
    run,
    simplex_lattice,
    tchebycheff,
    update_population,
    update_reference,
)
from .report import (
    AblationComparison,
    AblationRow,
    AdjustFreeTally,
    EntryRecord,
    RunSummary,
    compare_ablation,
    knee_index,
    load_front,
    project_front,
    tally_adjust_free,
    write_comparison_csv,
    write_tally_json,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # audio
    "Waveform",
    "LagSchedule",
    "WavFormatError",
    "UnsupportedWavError",
    "read_wav",
    "write_wav",
    "shift_circular",
    "mix_clipped",
    # features
    "MfccConfig",
    "DEFAULT_MFCC",
    "mfcc",
    "mel_filterbank",
    "feature_distance",
    # classifier
    "DEFAULT_LABELS",
    "ClassificationResult",
    "ClassifierError",
    "ProtocolError",
    "ClassifierTimeoutError",
    "ClassifierProcessError",
    "TemplateClassifier",
    "SubprocessClassifier",
    "classify",
    "make_synthetic_corpus",
    # objectives
    "OBJECTIVE_NAMES",
    "Genome",
    "ObjectiveVector",
    "EvalContext",
    "AdjustFreeReport",
    "default_lag_schedule",
    "random_genome",
    "evaluate",
    "is_adjust_free",
    # moead
    "RunConfig",
    "RunResult",
    "RunAborted",
    "Subproblem",
    "ArchiveEntry",
    "ParetoArchive",
    "GenerationStats",
    "GenerationSnapshot",
    "simplex_lattice",
    "build_weights",
    "neighborhoods",
    "tchebycheff",
    "de_crossover",
    "polynomial_mutation",
    "update_reference",
    "update_population",
    "dominates",
    "run",
    "load_checkpoint",
    # report
    "EntryRecord",
    "RunSummary",
    "AblationRow",
    "AblationComparison",
    "AdjustFreeTally",
    "load_front",
    "project_front",
    "knee_index",
    "compare_ablation",
    "tally_adjust_free",
    "write_comparison_csv",
    "write_tally_json",
]
