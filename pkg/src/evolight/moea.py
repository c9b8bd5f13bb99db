"""NSGA-II over enhancement parameters with a short memetic refinement.

Small populations and few generations are enough because the search space
is only three genes. The run is fully deterministic for a given seed: one
numpy Generator drives initialization, variation, and local search in a
fixed draw order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from evolight.enhance import (
    IDENTITY_PARAMS,
    EnhanceParams,
    ParamBounds,
    clip_params,
)
from evolight.fitness import (
    Evaluation,
    FitnessEvaluator,
    FitnessPair,
    PenaltyConfig,
)

# adaptive mutation never exceeds this, however low diversity drops
ADAPTIVE_RATE_CAP = 0.5


@dataclass
class Individual:
    """One candidate setting; rank/crowding are filled in by sorting."""

    params: EnhanceParams
    evaluation: Evaluation | None = None
    rank: int | None = None
    crowding: float | None = None

    @property
    def fitness(self) -> FitnessPair:
        if self.evaluation is None:
            raise ValueError("individual has not been evaluated")
        return self.evaluation.fitness


@dataclass(frozen=True)
class EvolutionConfig:
    """Search hyperparameters; defaults are the tuned operating point."""

    pop_size: int = 50
    generations: int = 5
    crossover_prob: float = 0.85
    mutation_rate_start: float = 0.3
    mutation_rate_end: float = 0.2
    local_search_steps: int = 8
    local_search_fraction: float = 0.10
    blend_alpha: float = 0.5
    mutation_sigma_fraction: float = 0.1
    local_search_sigma_fraction: float = 0.02
    diversity_threshold: float = 5.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2 or self.pop_size % 2:
            raise ValueError(f"pop_size must be even and >= 2, got {self.pop_size}")
        if self.generations < 1:
            raise ValueError(f"generations must be >= 1, got {self.generations}")
        for name in ("crossover_prob", "mutation_rate_start", "mutation_rate_end"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v!r}")
        if self.local_search_steps < 0:
            raise ValueError("local_search_steps must be >= 0")
        if not (0.0 < self.local_search_fraction <= 1.0):
            raise ValueError("local_search_fraction must be in (0, 1]")
        for name in ("blend_alpha", "mutation_sigma_fraction",
                     "local_search_sigma_fraction", "diversity_threshold"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        if not (0 <= self.rng_seed < 2 ** 64):
            raise ValueError("rng_seed must fit in an unsigned 64-bit int")


@dataclass(frozen=True)
class GenerationStats:
    """Per-generation trace record."""

    generation: int
    best_entropy: float
    best_f2: float
    mean_f2: float
    mutation_rate: float
    front_size: int
    # (f1, f2) of every rank-0 member, in population order
    front_fitness: tuple = ()


def init_population(bounds: ParamBounds, cfg: EvolutionConfig,
                    rng: np.random.Generator) -> list[Individual]:
    """Identity parameters in slot 0, the rest uniform inside the bounds.

    Seeding the identity guarantees the search never has to climb back to
    "do nothing", so a representative can never undercut the original's
    entropy. Identity is clipped if the bounds exclude it.
    """
    members = [Individual(clip_params(IDENTITY_PARAMS, bounds))]
    lows, highs = bounds.lows, bounds.highs
    for _ in range(cfg.pop_size - 1):
        genes = [rng.uniform(lows[g], highs[g]) for g in range(3)]
        members.append(Individual(EnhanceParams.from_array(genes)))
    return members


def nondominated_sort(pop: list[Individual]) -> list[list[int]]:
    """Deb's fast non-dominated sort; returns fronts as index lists.

    Front 0 is mutually non-dominated; front k+1 becomes non-dominated
    once fronts 0..k are removed. Also writes rank onto each individual.
    Indices inside a front stay in ascending population order.
    """
    if any(ind.evaluation is None for ind in pop):
        raise ValueError("population contains unevaluated individuals")
    f = np.array([ind.fitness.as_tuple() for ind in pop])
    f1, f2 = f[:, 0:1], f[:, 1:2]
    # dom[i, j]: i dominates j
    dom = (f1 <= f1.T) & (f2 <= f2.T) & ((f1 < f1.T) | (f2 < f2.T))
    counts = dom.sum(axis=0).astype(np.int64)
    assigned = np.zeros(len(pop), dtype=bool)
    fronts: list[list[int]] = []
    while not assigned.all():
        current = np.flatnonzero(~assigned & (counts == 0))
        for i in current:
            pop[i].rank = len(fronts)
        fronts.append([int(i) for i in current])
        assigned[current] = True
        counts[current] = -1
        counts -= dom[current].sum(axis=0)
    return fronts


def crowding_distance(front: list[int], pop: list[Individual]) -> np.ndarray:
    """Crowding distances for one front, aligned with the front list.

    Boundary members of each objective get +inf; interior members sum
    (next - prev) / (max - min) over the objectives. Objectives with zero
    spread contribute nothing. Also written onto the individuals.
    """
    k = len(front)
    d = np.zeros(k)
    if k <= 2:
        d[:] = np.inf
    else:
        f = np.array([pop[i].fitness.as_tuple() for i in front])
        for j in range(2):
            order = np.argsort(f[:, j], kind="stable")
            vals = f[order, j]
            d[order[0]] = np.inf
            d[order[-1]] = np.inf
            spread = vals[-1] - vals[0]
            if spread > 0.0:
                d[order[1:-1]] += (vals[2:] - vals[:-2]) / spread
    for slot, i in enumerate(front):
        pop[i].crowding = float(d[slot])
    return d


def _sort_population(pop: list[Individual]) -> list[list[int]]:
    fronts = nondominated_sort(pop)
    for front in fronts:
        crowding_distance(front, pop)
    return fronts


def _crowded_winner(a: Individual, b: Individual) -> Individual | None:
    """Lower rank wins; same rank, higher crowding wins; else None (tie)."""
    if a.rank is None or b.rank is None or a.crowding is None or b.crowding is None:
        raise ValueError("tournament needs ranked, crowded individuals")
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return None


def tournament_select(pop: list[Individual],
                      rng: np.random.Generator) -> Individual:
    """Binary tournament on (rank, crowding); exact ties flip a coin."""
    i, j = rng.integers(0, len(pop), size=2)
    a, b = pop[int(i)], pop[int(j)]
    winner = _crowded_winner(a, b)
    if winner is None:
        winner = a if rng.random() < 0.5 else b
    return winner


def blend_crossover(p1: EnhanceParams, p2: EnhanceParams, alpha: float,
                    bounds: ParamBounds,
                    rng: np.random.Generator) -> tuple[EnhanceParams, EnhanceParams]:
    """BLX-alpha: children drawn per gene from the parent interval widened
    by alpha on both sides, then clipped to the bounds."""
    a1, a2 = p1.as_array(), p2.as_array()
    lo = np.minimum(a1, a2)
    hi = np.maximum(a1, a2)
    span = hi - lo
    c1 = np.empty(3)
    c2 = np.empty(3)
    for g in range(3):
        low = lo[g] - alpha * span[g]
        high = hi[g] + alpha * span[g]
        c1[g] = rng.uniform(low, high)
        c2[g] = rng.uniform(low, high)
    lows, highs = bounds.lows, bounds.highs
    return (EnhanceParams.from_array(np.clip(c1, lows, highs)),
            EnhanceParams.from_array(np.clip(c2, lows, highs)))


def gaussian_mutate(params: EnhanceParams, rate: float, sigmas: np.ndarray,
                    bounds: ParamBounds,
                    rng: np.random.Generator) -> EnhanceParams:
    """Each gene independently gets N(0, sigma) noise with probability rate,
    then is clipped. sigmas are absolute per-gene scales."""
    genes = params.as_array()
    for g in range(3):
        if rng.random() < rate:
            genes[g] += rng.normal(0.0, sigmas[g])
    return EnhanceParams.from_array(np.clip(genes, bounds.lows, bounds.highs))


def adaptive_mutation_rate(pop: list[Individual], base_rate: float,
                           threshold: float) -> float:
    """Double the rate (capped at 0.5) when the brightness gene collapses.

    Diversity is the population standard deviation of the brightness gene;
    below threshold the population is considered converged too early.
    """
    b = np.array([ind.params.brightness for ind in pop])
    if float(b.std()) < threshold:
        return min(ADAPTIVE_RATE_CAP, 2.0 * base_rate)
    return base_rate


def local_search(ind: Individual, steps: int, evaluate_fn,
                 sigmas: np.ndarray, bounds: ParamBounds,
                 rng: np.random.Generator) -> Individual:
    """Stochastic hill climb with lexicographic acceptance.

    Each step perturbs all genes with N(0, sigma) noise and accepts the
    candidate only if it improves f1, or ties f1 and improves f2. f1 is
    therefore non-increasing across the climb. Returns a fresh Individual
    (rank/crowding unset); the input is never modified.
    """
    current_params = ind.params
    current_eval = ind.evaluation
    if current_eval is None:
        raise ValueError("local search needs an evaluated individual")
    for _ in range(steps):
        genes = current_params.as_array() + rng.normal(0.0, sigmas)
        candidate = EnhanceParams.from_array(
            np.clip(genes, bounds.lows, bounds.highs))
        cand_eval = evaluate_fn(candidate)
        fc, fi = cand_eval.fitness, current_eval.fitness
        if fc.f1 < fi.f1 or (fc.f1 == fi.f1 and fc.f2 < fi.f2):
            current_params, current_eval = candidate, cand_eval
    return Individual(current_params, current_eval)


def select_representative(front: list[Individual]) -> Individual:
    """The front member with lowest f1 (highest entropy), f2 breaking ties;
    remaining ties go to the earliest position."""
    if not front:
        raise ValueError("empty front")
    best = front[0]
    for ind in front[1:]:
        if (ind.fitness.f1, ind.fitness.f2) < (best.fitness.f1, best.fitness.f2):
            best = ind
    return best


def _mutation_schedule(cfg: EvolutionConfig, generation: int) -> float:
    """Linear ramp from start to end over generations 1..G."""
    if cfg.generations == 1:
        return cfg.mutation_rate_start
    t = (generation - 1) / (cfg.generations - 1)
    return cfg.mutation_rate_start + t * (cfg.mutation_rate_end - cfg.mutation_rate_start)


def _truncate(combined: list[Individual], fronts: list[list[int]],
              n: int) -> list[Individual]:
    """Elitist replacement: whole fronts while they fit, then the split
    front by descending crowding. Crowding ties keep the lower-f1 member
    (several boundary members can share +inf), then the earlier index."""
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= n:
            chosen.extend(front)
            if len(chosen) == n:
                break
        else:
            room = n - len(chosen)
            ordered = sorted(
                front,
                key=lambda i: (-combined[i].crowding, combined[i].fitness.f1, i))
            chosen.extend(ordered[:room])
            break
    return [combined[i] for i in chosen]


def evolve(original: np.ndarray, extractor, bounds: ParamBounds,
           penalty_cfg: PenaltyConfig, cfg: EvolutionConfig,
           ) -> tuple[Individual, list[Individual], list[GenerationStats]]:
    """Run the full search against one image.

    Returns (representative, final rank-0 front, per-generation stats).
    The representative maximizes entropy over the front, so it never falls
    below the original image's entropy (the identity individual seeded at
    slot 0 can only be displaced by something with lower f1).
    """
    rng = np.random.default_rng(cfg.rng_seed)
    evaluator = FitnessEvaluator(original, extractor, penalty_cfg)

    pop = init_population(bounds, cfg, rng)
    for ind in pop:
        ind.evaluation = evaluator(ind.params)
    fronts = _sort_population(pop)

    mut_sigmas = cfg.mutation_sigma_fraction * bounds.ranges
    ls_sigmas = cfg.local_search_sigma_fraction * bounds.ranges
    ls_count = max(1, round(cfg.local_search_fraction * cfg.pop_size))
    history: list[GenerationStats] = []

    for gen in range(1, cfg.generations + 1):
        rate = adaptive_mutation_rate(pop, _mutation_schedule(cfg, gen),
                                      cfg.diversity_threshold)

        offspring: list[Individual] = []
        while len(offspring) < cfg.pop_size:
            parent1 = tournament_select(pop, rng)
            parent2 = tournament_select(pop, rng)
            if rng.random() < cfg.crossover_prob:
                child1, child2 = blend_crossover(
                    parent1.params, parent2.params, cfg.blend_alpha, bounds, rng)
            else:
                child1, child2 = parent1.params, parent2.params
            child1 = gaussian_mutate(child1, rate, mut_sigmas, bounds, rng)
            child2 = gaussian_mutate(child2, rate, mut_sigmas, bounds, rng)
            offspring.append(Individual(child1))
            offspring.append(Individual(child2))
        for ind in offspring:
            ind.evaluation = evaluator(ind.params)

        combined = pop + offspring
        fronts = _sort_population(combined)
        pop = _truncate(combined, fronts, cfg.pop_size)
        fronts = _sort_population(pop)

        if cfg.local_search_steps > 0:
            order = sorted(range(len(pop)),
                           key=lambda i: (pop[i].rank, -pop[i].crowding, i))
            for i in order[:ls_count]:
                pop[i] = local_search(pop[i], cfg.local_search_steps,
                                      evaluator, ls_sigmas, bounds, rng)
            fronts = _sort_population(pop)

        f2s = [ind.fitness.f2 for ind in pop]
        history.append(GenerationStats(
            generation=gen,
            best_entropy=max(ind.evaluation.entropy for ind in pop),
            best_f2=min(f2s),
            mean_f2=float(np.mean(f2s)),
            mutation_rate=rate,
            front_size=len(fronts[0]),
            front_fitness=tuple(pop[i].fitness.as_tuple() for i in fronts[0]),
        ))

    front0 = [pop[i] for i in fronts[0]]
    return select_representative(front0), front0, history
