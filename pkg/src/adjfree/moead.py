"""Decomposition-based evolutionary multi-objective search (MOEA/D).

The engine turns the Pareto search into ``n_pop`` scalar subproblems,
one per weight vector on the objective simplex, each minimizing the
Tchebycheff distance to the running ideal point. Subproblems cooperate
through weight-space neighborhoods: offspring are bred from, and may
replace, solutions of nearby subproblems (the DE variant: with
probability ``neighbor_prob`` the mating and update pool is the
neighborhood, otherwise the whole population, and one child replaces at
most ``replacement_limit`` incumbents). Nondominated solutions are
collected in a bounded external archive.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .audio import LagSchedule, Waveform
from .features import DEFAULT_MFCC, MfccConfig
from .classifier import ClassifierError
from .objectives import (
    OBJECTIVE_NAMES,
    EvalContext,
    Genome,
    ObjectiveVector,
    default_lag_schedule,
    evaluate,
    random_genome,
)

__all__ = [
    "RunConfig",
    "Subproblem",
    "ArchiveEntry",
    "ParetoArchive",
    "GenerationStats",
    "GenerationSnapshot",
    "RunResult",
    "RunAborted",
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
    "save_checkpoint",
    "load_checkpoint",
]

logger = logging.getLogger(__name__)

# Zero weight components take this value in the scalarization so no
# objective is ever ignored outright.
ZERO_WEIGHT_EPS = 1e-6


@dataclass(frozen=True)
class RunConfig:
    """Search hyperparameters.

    ``objectives`` selects which components of the objective vector the
    decomposition optimizes: the full ("f1", "f2", "f3") or the
    two-objective ablation ("f1", "f3") that drops the confidence
    standard deviation. All three values are always recorded either way.
    """

    n_pop: int = 91
    n_gen: int = 2000
    neighborhood: int = 20
    de_scale: float = 0.5
    crossover_rate: float = 0.9
    mutation_prob: float | None = None  # default 1/dimension, resolved at run time
    mutation_eta: float = 20.0
    neighbor_prob: float = 0.9
    replacement_limit: int = 2
    seed: int = 0
    objectives: tuple[str, ...] = OBJECTIVE_NAMES
    bound: float = 0.10
    archive_capacity: int | None = 200
    max_queries: int | None = None

    def __post_init__(self):
        names = tuple(n for n in OBJECTIVE_NAMES if n in self.objectives)
        if len(names) < 2 or len(set(self.objectives)) != len(tuple(self.objectives)):
            raise ValueError(f"objectives must be >= 2 distinct of {OBJECTIVE_NAMES}")
        if len(names) != len(tuple(self.objectives)):
            raise ValueError(f"unknown objective in {self.objectives!r}")
        object.__setattr__(self, "objectives", names)
        if self.n_pop < max(2, len(names)):
            raise ValueError("n_pop too small for the weight simplex")
        if self.n_gen < 0:
            raise ValueError("n_gen must be >= 0")
        if not 2 <= self.neighborhood <= self.n_pop:
            raise ValueError("need 2 <= neighborhood <= n_pop")
        if not 0 < self.de_scale <= 1:
            raise ValueError("need 0 < de_scale <= 1")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("need 0 <= crossover_rate <= 1")
        if self.mutation_prob is not None and not 0 <= self.mutation_prob <= 1:
            raise ValueError("mutation_prob must be in [0, 1]")
        if self.mutation_eta <= 0:
            raise ValueError("mutation_eta must be positive")
        if not 0 <= self.neighbor_prob <= 1:
            raise ValueError("neighbor_prob must be in [0, 1]")
        if self.replacement_limit < 1:
            raise ValueError("replacement_limit must be >= 1")
        if self.bound <= 0:
            raise ValueError("bound must be positive")
        if self.archive_capacity is not None and self.archive_capacity < 1:
            raise ValueError("archive_capacity must be >= 1 or None")
        if self.max_queries is not None and self.max_queries < 0:
            raise ValueError("max_queries must be >= 0 or None")


def simplex_lattice(n_f: int, h: int) -> np.ndarray:
    """All weight vectors with components i/h summing to 1.

    Returns a (C(h+n_f-1, n_f-1), n_f) array in a fixed lexicographic
    order. h=1 yields the unit axes.
    """
    if n_f < 2:
        raise ValueError("need at least 2 objectives")
    if h < 1:
        raise ValueError("need h >= 1")
    rows = []

    def fill(prefix, remaining, slots):
        if slots == 1:
            rows.append(prefix + [remaining])
            return
        for i in range(remaining + 1):
            fill(prefix + [i], remaining - i, slots - 1)

    fill([], h, n_f)
    return np.array(rows, dtype=np.float64) / h


def build_weights(n_pop: int, n_f: int, rng: np.random.Generator) -> np.ndarray:
    """Weight vectors for ``n_pop`` subproblems.

    Uses the densest simplex lattice that fits and tops up with random
    simplex samples when ``n_pop`` is not an achievable lattice size, so
    the requested population size is honored exactly.
    """
    if n_pop < n_f:
        raise ValueError(f"need n_pop >= {n_f} to cover every objective axis")
    h = 1
    while math.comb(h + n_f, n_f - 1) <= n_pop:
        h += 1
    base = simplex_lattice(n_f, h)
    missing = n_pop - len(base)
    if missing == 0:
        return base
    logger.info(
        "population %d is not a simplex-lattice size; using the %d-vector lattice "
        "(h=%d) plus %d random simplex samples",
        n_pop,
        len(base),
        h,
        missing,
    )
    return np.vstack([base, rng.dirichlet(np.ones(n_f), size=missing)])


def neighborhoods(weights: np.ndarray, t: int) -> np.ndarray:
    """Indices of the ``t`` nearest subproblems per row, self included."""
    diff = weights[:, None, :] - weights[None, :, :]
    dist = (diff**2).sum(axis=2)
    order = np.argsort(dist, axis=1, kind="stable")
    neigh = order[:, :t].copy()
    for j in range(len(weights)):  # duplicate weights could crowd self out
        if j not in neigh[j]:
            neigh[j, -1] = j
    return neigh


def tchebycheff(objs: np.ndarray, weight: np.ndarray, ideal: np.ndarray) -> float:
    """max_i w_i * |f_i - z_i| with zero weights lifted to a small epsilon."""
    w = np.where(np.asarray(weight) == 0.0, ZERO_WEIGHT_EPS, weight)
    return float(np.max(w * np.abs(np.asarray(objs) - ideal)))


def update_reference(ideal: np.ndarray, objs: np.ndarray) -> np.ndarray:
    """Componentwise best (minimum) of the ideal point and a new vector."""
    return np.minimum(ideal, objs)


def dominates(a: np.ndarray, b: np.ndarray) -> bool:
    """Minimization dominance: a <= b everywhere and strictly better once."""
    return bool(np.all(a <= b) and np.any(a < b))


@dataclass(eq=False)
class Subproblem:
    """One scalarized subproblem and its current best solution."""

    weight: np.ndarray
    neighbors: np.ndarray
    genome: Genome
    objectives: ObjectiveVector


@dataclass(frozen=True, eq=False)
class ArchiveEntry:
    genome: Genome
    objectives: ObjectiveVector


class ParetoArchive:
    """External set of mutually nondominated solutions.

    Dominance is judged on ``objective_names`` (the active subset of a
    run). Inserting a dominated candidate is a no-op; inserting a
    dominating one evicts everything it dominates. When the archive
    overflows its capacity, the entry with the smallest crowding
    distance - the one in the most crowded objective-space region - is
    dropped.
    """

    def __init__(self, capacity: int | None = None, objective_names=OBJECTIVE_NAMES):
        if capacity is not None and capacity < 1:
            raise ValueError("capacity must be >= 1 or None")
        self.capacity = capacity
        self.objective_names = tuple(objective_names)
        self._entries: list[ArchiveEntry] = []
        self._matrix = np.empty((0, len(self.objective_names)))

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    @property
    def entries(self) -> tuple[ArchiveEntry, ...]:
        return tuple(self._entries)

    def objective_matrix(self) -> np.ndarray:
        """Active objective values, one row per entry (copy)."""
        return self._matrix.copy()

    def insert(self, genome: Genome, objectives: ObjectiveVector) -> bool:
        """Add a solution unless an existing entry dominates it."""
        vec = objectives.as_array(self.objective_names)
        if self._entries:
            le = (self._matrix <= vec).all(axis=1)
            lt = (self._matrix < vec).any(axis=1)
            if np.any(le & lt):
                return False
            dominated = (self._matrix >= vec).all(axis=1) & (self._matrix > vec).any(axis=1)
            if np.any(dominated):
                keep = ~dominated
                self._entries = [e for e, k in zip(self._entries, keep) if k]
                self._matrix = self._matrix[keep]
        self._entries.append(ArchiveEntry(genome, objectives))
        self._matrix = np.vstack([self._matrix, vec[None, :]])
        if self.capacity is not None and len(self._entries) > self.capacity:
            self._drop_most_crowded()
        return True

    def _drop_most_crowded(self):
        drop = int(np.argmin(_crowding_distances(self._matrix)))
        del self._entries[drop]
        self._matrix = np.delete(self._matrix, drop, axis=0)

    def snapshot(self) -> tuple[ArchiveEntry, ...]:
        return tuple(self._entries)

    def restore(self, entries) -> None:
        self._entries = list(entries)
        self._matrix = (
            np.array([e.objectives.as_array(self.objective_names) for e in self._entries])
            if self._entries
            else np.empty((0, len(self.objective_names)))
        )


def _crowding_distances(matrix: np.ndarray) -> np.ndarray:
    """Per-entry crowding distance; extreme entries per objective get inf."""
    n, m = matrix.shape
    dist = np.zeros(n)
    for col in range(m):
        order = np.argsort(matrix[:, col], kind="stable")
        vals = matrix[order, col]
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        span = vals[-1] - vals[0]
        if span > 0 and n > 2:
            dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def de_crossover(
    x: Genome,
    a: Genome,
    b: Genome,
    c: Genome,
    f_scale: float,
    cr: float,
    rng: np.random.Generator,
) -> Genome:
    """Differential-evolution binomial crossover, clamped to the box.

    Per dimension the trial takes a + f_scale * (b - c) with probability
    ``cr`` (and always at one forced dimension), else the incumbent x.
    """
    n = len(x)
    if not len(a) == len(b) == len(c) == n:
        raise ValueError("parent genomes must share one length")
    cross = rng.random(n) < cr
    cross[rng.integers(n)] = True
    trial = np.where(cross, a.offsets + f_scale * (b.offsets - c.offsets), x.offsets)
    return Genome(np.clip(trial, -x.bound, x.bound), x.bound)


def polynomial_mutation(
    g: Genome, p_m: float, eta: float, rng: np.random.Generator
) -> Genome:
    """Bounded polynomial mutation with distribution index ``eta``.

    Each dimension mutates independently with probability ``p_m``; the
    perturbation distribution concentrates near zero as eta grows, and
    mutated values always stay inside the box.
    """
    if not 0 <= p_m <= 1:
        raise ValueError("p_m must be in [0, 1]")
    if eta <= 0:
        raise ValueError("eta must be positive")
    n = len(g)
    mask = rng.random(n) < p_m
    u = rng.random(n)
    if not mask.any():
        return Genome(g.offsets.copy(), g.bound)

    lo, hi = -g.bound, g.bound
    span = hi - lo
    x = g.offsets
    d_lo = (x - lo) / span
    d_hi = (hi - x) / span
    mpow = 1.0 / (eta + 1.0)
    val_lo = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d_lo) ** (eta + 1.0)
    val_hi = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d_hi) ** (eta + 1.0)
    delta = np.where(u < 0.5, val_lo**mpow - 1.0, 1.0 - val_hi**mpow)
    mutated = np.where(mask, x + delta * span, x)
    return Genome(np.clip(mutated, lo, hi), g.bound)


def update_population(
    subproblems: list[Subproblem],
    child: Genome,
    child_objs: ObjectiveVector,
    candidate_indices,
    ideal: np.ndarray,
    n_r: int,
    rng: np.random.Generator,
    objective_names=OBJECTIVE_NAMES,
) -> int:
    """Let a child replace incumbents it beats, capped at ``n_r`` swaps.

    ``candidate_indices`` is the update range already chosen by the
    caller (the origin's neighborhood, or everyone). It is scanned in
    random order; a subproblem's solution is replaced only when the
    child's Tchebycheff value against that subproblem's weight is
    strictly smaller, so ties keep the incumbent.
    """
    order = rng.permutation(np.asarray(candidate_indices))
    weights = np.stack([subproblems[i].weight for i in order])
    weights = np.where(weights == 0.0, ZERO_WEIGHT_EPS, weights)
    incumbent = np.stack([subproblems[i].objectives.as_array(objective_names) for i in order])
    child_vec = child_objs.as_array(objective_names)

    g_child = (weights * np.abs(child_vec - ideal)).max(axis=1)
    g_incumbent = (weights * np.abs(incumbent - ideal)).max(axis=1)
    winners = np.nonzero(g_child < g_incumbent)[0][:n_r]
    for pos in winners:
        sp = subproblems[order[pos]]
        sp.genome = child
        sp.objectives = child_objs
    return len(winners)


@dataclass(frozen=True)
class GenerationStats:
    """Population summary after one generation (generation 0 = initial)."""

    generation: int
    best: dict[str, float]
    mean: dict[str, float]
    queries: int


@dataclass(frozen=True)
class GenerationSnapshot:
    """Live engine state handed to the per-generation callback (read-only)."""

    generation: int
    subproblems: list[Subproblem]
    ideal: np.ndarray
    archive: ParetoArchive
    queries: int


@dataclass(frozen=True)
class RunResult:
    archive: ParetoArchive
    history: list[GenerationStats]
    queries: int
    config: RunConfig
    correct_label: str
    clean_confidence: float
    generations_run: int


class RunAborted(RuntimeError):
    """A classifier failure stopped the search; state may have been saved."""

    def __init__(self, message: str, checkpoint_path=None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path


def _stats(generation: int, subproblems, queries: int) -> GenerationStats:
    values = np.array([sp.objectives.as_array() for sp in subproblems])
    best = dict(zip(OBJECTIVE_NAMES, values.min(axis=0).tolist()))
    mean = dict(zip(OBJECTIVE_NAMES, values.mean(axis=0).tolist()))
    return GenerationStats(generation, best, mean, queries)


class _BoundaryState:
    """Engine state captured at a generation boundary.

    Genomes and objective vectors are immutable, so a shallow capture of
    the references is enough to restart the following generation exactly
    as if the run had never been interrupted.
    """

    def __init__(self, generation, subproblems, ideal, archive, rng, queries):
        self.generation = generation
        self.population = [(sp.genome, sp.objectives) for sp in subproblems]
        self.ideal = ideal.copy()
        self.archive_entries = archive.snapshot()
        self.rng_state = rng.bit_generator.state
        self.queries = queries


def save_checkpoint(path, state: _BoundaryState, weights, neighbors, cfg: RunConfig,
                    lag_schedule: LagSchedule, correct_label: str) -> None:
    """Serialize a resumable run state to JSON."""
    def entry(genome, objs):
        return {"offsets": genome.offsets.tolist(), "objectives": objs.as_dict()}

    doc = {
        "format": 1,
        "generation": state.generation,
        "queries": state.queries,
        "correct_label": correct_label,
        "rng_state": state.rng_state,
        "ideal": state.ideal.tolist(),
        "weights": np.asarray(weights).tolist(),
        "neighbors": np.asarray(neighbors).tolist(),
        "population": [entry(g, o) for g, o in state.population],
        "archive": [entry(e.genome, e.objectives) for e in state.archive_entries],
        "config": asdict(cfg),
        "lag_schedule": {"lags": list(lag_schedule.lags), "t_max": lag_schedule.t_max},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != 1:
        raise ValueError(f"unsupported checkpoint format {doc.get('format')!r}")
    return doc


def run(
    target: Waveform,
    model,
    cfg: RunConfig,
    lag_schedule: LagSchedule | None = None,
    mfcc_cfg: MfccConfig = DEFAULT_MFCC,
    rmse_distance: bool = False,
    on_generation=None,
    checkpoint_path=None,
    resume_from=None,
) -> RunResult:
    """Search for lag-robust adversarial perturbations against ``target``.

    Runs the full decomposition loop: a uniform-random initial
    population in the box, then per generation one offspring per
    subproblem (DE crossover within the mating pool, polynomial
    mutation, evaluation, ideal-point update, bounded replacement,
    archive insertion). Stops after ``cfg.n_gen`` generations, or at the
    last generation boundary where ``cfg.max_queries`` still covered a
    full generation.

    ``on_generation`` is called with a :class:`GenerationSnapshot` after
    the initial population (generation 0) and after every generation.
    On a classifier failure the state of the last completed generation
    is written to ``checkpoint_path`` (if given) and :class:`RunAborted`
    is raised; passing the file back as ``resume_from`` (with the same
    target, model, and config) continues the run as if uninterrupted.
    """
    schedule = lag_schedule if lag_schedule is not None else default_lag_schedule()
    names = cfg.objectives
    ctx = EvalContext(
        target, model, lag_schedule=schedule, mfcc_cfg=mfcc_cfg, rmse_distance=rmse_distance
    )
    rng = np.random.default_rng(cfg.seed)
    dim = len(target)
    p_m = cfg.mutation_prob if cfg.mutation_prob is not None else 1.0 / dim
    archive = ParetoArchive(cfg.archive_capacity, names)
    history: list[GenerationStats] = []

    if resume_from is not None:
        doc = load_checkpoint(resume_from)
        if doc["correct_label"] != ctx.correct_label:
            raise ValueError(
                f"checkpoint was built for class {doc['correct_label']!r}, "
                f"target classifies as {ctx.correct_label!r}"
            )
        # JSON turns the objectives tuple into a list; compare post-round-trip
        if doc["config"] != json.loads(json.dumps(asdict(cfg))):
            raise ValueError("checkpoint config does not match the requested config")
        weights = np.array(doc["weights"])
        neighbors = np.array(doc["neighbors"], dtype=np.intp)
        subproblems = [
            Subproblem(
                weights[j],
                neighbors[j],
                Genome(np.array(p["offsets"]), cfg.bound),
                ObjectiveVector(**p["objectives"]),
            )
            for j, p in enumerate(doc["population"])
        ]
        ideal = np.array(doc["ideal"])
        archive.restore(
            ArchiveEntry(Genome(np.array(e["offsets"]), cfg.bound), ObjectiveVector(**e["objectives"]))
            for e in doc["archive"]
        )
        rng.bit_generator.state = doc["rng_state"]
        ctx.query_count = doc["queries"]
        start_gen = doc["generation"] + 1
        history.append(_stats(doc["generation"], subproblems, ctx.query_count))
    else:
        weights = build_weights(cfg.n_pop, len(names), rng)
        neighbors = neighborhoods(weights, cfg.neighborhood)
        try:
            subproblems = []
            for j in range(cfg.n_pop):
                genome = random_genome(dim, cfg.bound, rng)
                subproblems.append(
                    Subproblem(weights[j], neighbors[j], genome, evaluate(genome, ctx))
                )
        except ClassifierError as exc:
            # Nothing coherent to checkpoint before the population exists.
            raise RunAborted(f"classifier failed during initialization: {exc}") from exc
        ideal = np.array(
            [sp.objectives.as_array(names) for sp in subproblems]
        ).min(axis=0)
        for sp in subproblems:
            archive.insert(sp.genome, sp.objectives)
        start_gen = 1
        history.append(_stats(0, subproblems, ctx.query_count))

    boundary = _BoundaryState(start_gen - 1, subproblems, ideal, archive, rng, ctx.query_count)
    if on_generation is not None:
        on_generation(GenerationSnapshot(start_gen - 1, subproblems, ideal.copy(), archive, ctx.query_count))

    generation_cost = len(schedule) * cfg.n_pop
    all_indices = np.arange(cfg.n_pop)
    completed = start_gen - 1

    for gen in range(start_gen, cfg.n_gen + 1):
        if cfg.max_queries is not None and ctx.query_count + generation_cost > cfg.max_queries:
            logger.info("query budget exhausted after generation %d", completed)
            break
        try:
            for j in rng.permutation(cfg.n_pop):
                in_neighborhood = rng.random() < cfg.neighbor_prob
                pool = subproblems[j].neighbors if in_neighborhood else all_indices
                parents = rng.choice(pool, size=3, replace=len(pool) < 3)
                a, b, c = (subproblems[i].genome for i in parents)
                trial = de_crossover(
                    subproblems[j].genome, a, b, c, cfg.de_scale, cfg.crossover_rate, rng
                )
                child = polynomial_mutation(trial, p_m, cfg.mutation_eta, rng)
                child_objs = evaluate(child, ctx)
                ideal = update_reference(ideal, child_objs.as_array(names))
                update_population(
                    subproblems, child, child_objs, pool, ideal, cfg.replacement_limit, rng, names
                )
                archive.insert(child, child_objs)
        except ClassifierError as exc:
            if checkpoint_path is not None:
                save_checkpoint(
                    checkpoint_path, boundary, weights, neighbors, cfg, schedule, ctx.correct_label
                )
                raise RunAborted(
                    f"classifier failed in generation {gen}; "
                    f"generation-{boundary.generation} state saved to {checkpoint_path}",
                    checkpoint_path,
                ) from exc
            raise RunAborted(f"classifier failed in generation {gen}: {exc}") from exc

        completed = gen
        boundary = _BoundaryState(gen, subproblems, ideal, archive, rng, ctx.query_count)
        history.append(_stats(gen, subproblems, ctx.query_count))
        if on_generation is not None:
            on_generation(
                GenerationSnapshot(gen, subproblems, ideal.copy(), archive, ctx.query_count)
            )

    return RunResult(
        archive,
        history,
        ctx.query_count,
        cfg,
        ctx.correct_label,
        ctx.clean_confidence,
        completed,
    )
