"""Individuals as semantic vectors plus lineage, RMSE fitness, and the
geometric semantic variation operators.

Offspring are never expanded into syntax trees.  Each one keeps its output
vector over every case (train and test), a lineage record naming the
operator, parents, random trees and fitted coefficients, and the node count
the equivalent expression would have.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .exprtree import RandomTree, node_count, saturate, semantics_of_tree
from .regression import OLS, RegressionConfig, fit, predict

__all__ = [
    "INITIAL",
    "CROSSOVER",
    "MUTATION",
    "MUTATION_LS",
    "REG_LS",
    "COPY",
    "LengthMismatch",
    "NegativeStep",
    "EmptyIndexSet",
    "Lineage",
    "Individual",
    "RandomFunction",
    "FitnessCases",
    "rmse",
    "from_tree",
    "gsc",
    "gsm",
    "gsm_ls",
    "reg_ls",
    "copy_of",
    "reg_basis",
]

INITIAL = "InitialTree"
CROSSOVER = "Crossover"
MUTATION = "Mutation"
MUTATION_LS = "MutationLS"
REG_LS = "RegLS"
COPY = "Copy"

_ARITY = {
    # kind: (parents, random trees, coefficients)
    INITIAL: (0, 1, 0),
    CROSSOVER: (2, 1, 0),
    MUTATION: (1, 2, 0),
    MUTATION_LS: (1, 2, 3),
    REG_LS: (1, 0, 4),
    COPY: (1, 0, 0),
}


class LengthMismatch(ValueError):
    pass


class NegativeStep(ValueError):
    pass


class EmptyIndexSet(ValueError):
    pass


@dataclass(frozen=True)
class Lineage:
    kind: str
    parent_ids: tuple[int, ...] = ()
    random_tree_ids: tuple[int | None, ...] = ()
    coefficients: tuple[float, ...] = ()
    ms: float | None = None

    def __post_init__(self):
        if self.kind not in _ARITY:
            raise ValueError(f"unknown lineage kind {self.kind!r}")
        parents, trees, coefs = _ARITY[self.kind]
        if (len(self.parent_ids), len(self.random_tree_ids), len(self.coefficients)) != (
            parents,
            trees,
            coefs,
        ):
            raise ValueError(f"bad arity for {self.kind} lineage: {self}")
        if (self.ms is not None) != (self.kind == MUTATION):
            raise ValueError("ms is recorded for Mutation lineage only")


@dataclass(frozen=True, eq=False)
class Individual:
    id: int
    semantics: np.ndarray = field(repr=False)
    lineage: Lineage
    train_fitness: float
    test_fitness: float
    size: int | None = None


@dataclass(frozen=True, eq=False)
class RandomFunction:
    """Semantics of a random tree, bounded to (0, 1) when used by an operator."""

    semantics: np.ndarray = field(repr=False)
    id: int | None = None
    size: int | None = None


def rmse(semantics, targets, indices) -> float:
    indices = np.asarray(indices, dtype=np.intp)
    if indices.size == 0:
        raise EmptyIndexSet("RMSE over an empty index set")
    diff = np.asarray(semantics, dtype=float)[indices] - np.asarray(targets, dtype=float)[indices]
    return float(np.sqrt(np.mean(diff * diff)))


class FitnessCases:
    """Targets and the outer train/test split shared by one run.

    Also hands out individual and random tree identifiers, so two runs built
    from the same seed number their individuals identically.
    """

    def __init__(self, targets, train, test):
        self.targets = np.asarray(targets, dtype=float)
        self.train = np.asarray(train, dtype=np.intp)
        self.test = np.asarray(test, dtype=np.intp)
        if self.train.size == 0 or self.test.size == 0:
            raise EmptyIndexSet("train and test index sets must be non-empty")
        self._ids = itertools.count()

    @property
    def n_cases(self) -> int:
        return self.targets.size

    def next_id(self) -> int:
        return next(self._ids)

    def make(self, semantics, lineage: Lineage, size: int | None = None) -> Individual:
        semantics = np.array(semantics, dtype=float)
        if semantics.shape != self.targets.shape:
            raise LengthMismatch(
                f"semantics of length {semantics.size}, expected {self.targets.size}"
            )
        semantics.flags.writeable = False
        return Individual(
            id=self.next_id(),
            semantics=semantics,
            lineage=lineage,
            train_fitness=rmse(semantics, self.targets, self.train),
            test_fitness=rmse(semantics, self.targets, self.test),
            size=size,
        )

    def random_function(self, tree: RandomTree, inputs) -> RandomFunction:
        return RandomFunction(
            semantics_of_tree(tree, inputs, bounded=True), self.next_id(), node_count(tree)
        )


def _as_random(r) -> RandomFunction:
    if isinstance(r, RandomFunction):
        return r
    return RandomFunction(np.asarray(r, dtype=float))


def _check_lengths(*vectors):
    sizes = {np.shape(v) for v in vectors}
    if len(sizes) != 1:
        raise LengthMismatch(f"vectors of differing shapes: {sorted(sizes)}")


def _sum_sizes(*sizes, extra: int) -> int | None:
    if any(s is None for s in sizes):
        return None
    return sum(sizes) + extra


def from_tree(tree: RandomTree, inputs, cases: FitnessCases) -> Individual:
    tree_id = cases.next_id()
    return cases.make(
        semantics_of_tree(tree, inputs, bounded=False),
        Lineage(INITIAL, random_tree_ids=(tree_id,)),
        node_count(tree),
    )


def gsc(p1: Individual, p2: Individual, tr, cases: FitnessCases) -> Individual:
    """Geometric semantic crossover: ``p1 * tr + (1 - tr) * p2`` case by case."""
    tr = _as_random(tr)
    _check_lengths(p1.semantics, p2.semantics, tr.semantics)
    t = tr.semantics
    child = p1.semantics * t + (1.0 - t) * p2.semantics
    return cases.make(
        child,
        Lineage(CROSSOVER, (p1.id, p2.id), (tr.id,)),
        _sum_sizes(p1.size, p2.size, tr.size, tr.size, extra=5),
    )


def gsm(p: Individual, r1, r2, ms: float, cases: FitnessCases) -> Individual:
    """Geometric semantic mutation ``p + ms * (r1 - r2)``."""
    if ms < 0:
        raise NegativeStep(f"mutation step must be non-negative, got {ms}")
    r1, r2 = _as_random(r1), _as_random(r2)
    _check_lengths(p.semantics, r1.semantics, r2.semantics)
    child = p.semantics + ms * (r1.semantics - r2.semantics)
    return cases.make(
        child,
        Lineage(MUTATION, (p.id,), (r1.id, r2.id), ms=float(ms)),
        _sum_sizes(p.size, r1.size, r2.size, extra=4),
    )


def _fit_indices(fit_indices, cases: FitnessCases) -> np.ndarray:
    idx = cases.train if fit_indices is None else np.asarray(fit_indices, dtype=np.intp)
    if idx.size == 0:
        raise EmptyIndexSet("local search needs at least one fitting case")
    return idx


def _fit_no_worse(design, idx, targets, reg, parent, identity) -> np.ndarray:
    coef = fit(design[idx], targets[idx], reg)
    if reg is not None and reg.method != OLS:
        return coef
    # the parent is in the OLS model span; anything worse on the fitting
    # cases is rounding noise around an exact fit
    y = targets[idx]
    fitted = saturate(predict(design[idx], coef))
    if np.sum((fitted - y) ** 2) > np.sum((parent[idx] - y) ** 2):
        return np.array(identity)
    return coef


def gsm_ls(
    p: Individual,
    r1,
    r2,
    cases: FitnessCases,
    fit_indices=None,
    reg: RegressionConfig | None = None,
) -> Individual:
    """Mutation with local search: ``a0 + a1 * p + a2 * (r1 - r2)`` with the
    three weights fitted to the targets on ``fit_indices`` (train by default)
    and then applied to every case."""
    r1, r2 = _as_random(r1), _as_random(r2)
    _check_lengths(p.semantics, r1.semantics, r2.semantics)
    idx = _fit_indices(fit_indices, cases)
    design = np.column_stack(
        [np.ones_like(p.semantics), p.semantics, r1.semantics - r2.semantics]
    )
    alpha = _fit_no_worse(design, idx, cases.targets, reg, p.semantics, (0.0, 1.0, 0.0))
    child = saturate(predict(design, alpha))
    return cases.make(
        child,
        Lineage(MUTATION_LS, (p.id,), (r1.id, r2.id), tuple(float(a) for a in alpha)),
        _sum_sizes(p.size, r1.size, r2.size, extra=8),
    )


def reg_basis(semantics) -> np.ndarray:
    """Columns ``T, 1, min(0, T), max(0, T)``."""
    t = np.asarray(semantics, dtype=float)
    return np.column_stack([t, np.ones_like(t), np.minimum(0.0, t), np.maximum(0.0, t)])


def reg_ls(
    p: Individual,
    cases: FitnessCases,
    fit_indices=None,
    reg: RegressionConfig | None = None,
) -> Individual:
    idx = _fit_indices(fit_indices, cases)
    design = reg_basis(p.semantics)
    beta = _fit_no_worse(design, idx, cases.targets, reg, p.semantics, (1.0, 0.0, 0.0, 0.0))
    child = saturate(predict(design, beta))
    return cases.make(
        child,
        Lineage(REG_LS, (p.id,), (), tuple(float(b) for b in beta)),
        _sum_sizes(p.size, p.size, p.size, extra=14),
    )


def copy_of(p: Individual, cases: FitnessCases) -> Individual:
    return cases.make(p.semantics, Lineage(COPY, (p.id,)), p.size)
