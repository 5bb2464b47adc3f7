"""Generational GSGP loop covering the thirteen local-search variants.

Variant tags::

    GSGP                      plain geometric semantic mutation
    GPLS, GPLS_r              GSM-LS every generation (OLS / ridge)
    GPLS_g, GPLS_rg           GSM-LS gated by the adaptive acceptance test
    HYBRID, HYBRID_r          GSM-LS for the first ``hybrid_cutoff`` generations
    REG_FULL, REG_FULL_r      GSM, then basis-function local search every generation
    REG, REG_r                same, first ``hybrid_cutoff`` generations only
    REG_g, REG_rg             same, every generation, gated
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import semops
from .adaptive import GenState, attempt_local_search, end_generation, ls_probability
from .dataset import Dataset, IndexSplit, InnerSplit, inner_split, outer_split
from .exprtree import RampedHalfAndHalf
from .regression import RegressionConfig
from .semops import FitnessCases, Individual, RandomFunction

__all__ = [
    "VARIANTS",
    "VariantTraits",
    "EvolutionConfig",
    "GenerationRecord",
    "RunLog",
    "RunContext",
    "EmptyPopulation",
    "initialize_population",
    "tournament_select",
    "step_generation",
    "run",
]


class EmptyPopulation(ValueError):
    pass


@dataclass(frozen=True)
class VariantTraits:
    local_search: str  # "none", "gsm_ls" or "reg"
    ridge: bool = False
    gated: bool = False
    limited: bool = False  # local search only up to hybrid_cutoff


VARIANTS: dict[str, VariantTraits] = {
    "GSGP": VariantTraits("none"),
    "GPLS": VariantTraits("gsm_ls"),
    "GPLS_r": VariantTraits("gsm_ls", ridge=True),
    "GPLS_g": VariantTraits("gsm_ls", gated=True),
    "GPLS_rg": VariantTraits("gsm_ls", ridge=True, gated=True),
    "HYBRID": VariantTraits("gsm_ls", limited=True),
    "HYBRID_r": VariantTraits("gsm_ls", ridge=True, limited=True),
    "REG_FULL": VariantTraits("reg"),
    "REG_FULL_r": VariantTraits("reg", ridge=True),
    "REG": VariantTraits("reg", limited=True),
    "REG_r": VariantTraits("reg", ridge=True, limited=True),
    "REG_g": VariantTraits("reg", gated=True),
    "REG_rg": VariantTraits("reg", ridge=True, gated=True),
}


@dataclass(frozen=True)
class EvolutionConfig:
    variant: str = "GSGP"
    population_size: int = 100
    generations: int = 100
    tournament_size: int = 4
    p_crossover: float = 0.4
    p_mutation: float = 0.6
    ms: float = 0.1
    max_depth: int = 6
    ridge_lambda: float = 0.001
    hybrid_cutoff: int = 10

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(
                f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}"
            )
        for name in ("population_size", "tournament_size", "max_depth", "hybrid_cutoff"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        if not (0.0 <= self.p_crossover <= 1.0 and 0.0 <= self.p_mutation <= 1.0):
            raise ValueError("variation probabilities must lie in [0, 1]")
        if abs(self.p_crossover + self.p_mutation - 1.0) > 1e-12:
            raise ValueError("p_crossover + p_mutation must equal 1")
        if not self.ms > 0:
            raise ValueError("ms must be positive")
        if not self.ridge_lambda > 0:
            raise ValueError("ridge_lambda must be positive")

    @property
    def traits(self) -> VariantTraits:
        return VARIANTS[self.variant]

    @property
    def regression(self) -> RegressionConfig:
        if self.traits.ridge:
            return RegressionConfig.ridge(self.ridge_lambda)
        return RegressionConfig.ols()

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    train_rmse: float
    test_rmse: float
    ls_prob: float | None = None


@dataclass
class RunLog:
    variant: str
    seed: int
    records: list[GenerationRecord] = field(default_factory=list)

    def train_curve(self) -> np.ndarray:
        return np.array([r.train_rmse for r in self.records])

    def test_curve(self) -> np.ndarray:
        return np.array([r.test_rmse for r in self.records])

    def prob_curve(self) -> np.ndarray:
        return np.array([np.nan if r.ls_prob is None else r.ls_prob for r in self.records])

    @property
    def final(self) -> GenerationRecord:
        return self.records[-1]


@dataclass
class RunContext:
    """Per-run state shared by the generation steps."""

    config: EvolutionConfig
    dataset: Dataset
    split: IndexSplit
    cases: FitnessCases
    rng: np.random.Generator
    inner: InnerSplit | None = None
    trees: RampedHalfAndHalf = field(init=False)

    def __post_init__(self):
        self.trees = RampedHalfAndHalf(self.dataset.num_vars, self.config.max_depth, self.rng)

    @classmethod
    def create(cls, config: EvolutionConfig, dataset: Dataset, seed) -> "RunContext":
        # independent streams: the outer split, the inner split and evolution
        split_seq, inner_seq, evo_seq = np.random.SeedSequence(seed).spawn(3)
        split = outer_split(dataset.n_cases, split_seq)
        inner = inner_split(split.train, inner_seq) if config.traits.gated else None
        cases = FitnessCases(dataset.targets, split.train, split.test)
        return cls(config, dataset, split, cases, np.random.default_rng(evo_seq), inner)

    def random_function(self) -> RandomFunction:
        return self.cases.random_function(self.trees(), self.dataset.inputs)


def initialize_population(ctx: RunContext) -> list[Individual]:
    return [
        semops.from_tree(ctx.trees(), ctx.dataset.inputs, ctx.cases)
        for _ in range(ctx.config.population_size)
    ]


def tournament_select(population, k: int, rng: np.random.Generator, fitness=None) -> Individual:
    """Best of ``k`` uniform draws with replacement; ties go to the earliest draw."""
    if not population:
        raise EmptyPopulation("cannot select from an empty population")
    if k < 1:
        raise ValueError("tournament size must be positive")
    if fitness is None:
        fitness = np.array([ind.train_fitness for ind in population])
    drawn = rng.integers(0, len(population), size=k)
    return population[drawn[np.argmin(fitness[drawn])]]


def _in_window(config: EvolutionConfig, generation: int) -> bool:
    return not config.traits.limited or generation <= config.hybrid_cutoff


def _mutate(parent: Individual, ctx: RunContext, generation: int, p_ls, state):
    config, cases = ctx.config, ctx.cases
    traits = config.traits
    if traits.local_search != "gsm_ls" or not _in_window(config, generation):
        return semops.gsm(parent, ctx.random_function(), ctx.random_function(), config.ms, cases), state
    reg = config.regression
    if not traits.gated:
        return semops.gsm_ls(parent, ctx.random_function(), ctx.random_function(), cases, None, reg), state
    if ctx.rng.random() >= p_ls:
        return semops.copy_of(parent, cases), state
    r1, r2 = ctx.random_function(), ctx.random_function()
    survivor, state = attempt_local_search(
        parent,
        lambda idx: semops.gsm_ls(parent, r1, r2, cases, idx, reg),
        ctx.inner,
        cases.targets,
        state,
    )
    if survivor is parent:
        survivor = semops.copy_of(parent, cases)
    return survivor, state


def step_generation(
    population: list[Individual],
    ctx: RunContext,
    generation: int,
    state: GenState | None = None,
) -> tuple[list[Individual], GenState | None]:
    """Build generation ``generation`` (1-based) from ``population``."""
    config, cases, rng = ctx.config, ctx.cases, ctx.rng
    traits = config.traits
    fitness = np.array([ind.train_fitness for ind in population])
    elite = population[int(np.argmin(fitness))]
    p_ls = ls_probability(state) if traits.gated else None
    k = config.tournament_size

    offspring = []
    for _ in range(config.population_size):
        if rng.random() < config.p_crossover:
            a = tournament_select(population, k, rng, fitness)
            b = tournament_select(population, k, rng, fitness)
            child = semops.gsc(a, b, ctx.random_function(), cases)
        else:
            parent = tournament_select(population, k, rng, fitness)
            child, state = _mutate(parent, ctx, generation, p_ls, state)
        offspring.append(child)

    if traits.local_search == "reg" and _in_window(config, generation):
        reg = config.regression
        if traits.gated:
            for i, ind in enumerate(offspring):
                if rng.random() < p_ls:
                    offspring[i], state = attempt_local_search(
                        ind,
                        lambda idx, ind=ind: semops.reg_ls(ind, cases, idx, reg),
                        ctx.inner,
                        cases.targets,
                        state,
                    )
        else:
            offspring = [semops.reg_ls(ind, cases, None, reg) for ind in offspring]

    new_fitness = np.array([ind.train_fitness for ind in offspring])
    if elite.train_fitness < new_fitness.min():
        offspring[int(np.argmax(new_fitness))] = elite
    return offspring, state


def _record(population, generation: int, state: GenState | None) -> GenerationRecord:
    best = min(population, key=lambda ind: ind.train_fitness)
    prob = None if state is None else ls_probability(state)
    return GenerationRecord(generation, best.train_fitness, best.test_fitness, prob)


def run(config: EvolutionConfig, dataset: Dataset, seed: int) -> RunLog:
    """One seeded run; returns the best-on-train trajectory."""
    ctx = RunContext.create(config, dataset, seed)
    state = GenState() if config.traits.gated else None
    population = initialize_population(ctx)
    log = RunLog(config.variant, int(seed), [_record(population, 0, state)])
    for generation in range(1, config.generations + 1):
        prob = None if state is None else ls_probability(state)
        population, state = step_generation(population, ctx, generation, state)
        best = min(population, key=lambda ind: ind.train_fitness)
        log.records.append(GenerationRecord(generation, best.train_fitness, best.test_fitness, prob))
        if state is not None:
            state = end_generation(state)
    return log
