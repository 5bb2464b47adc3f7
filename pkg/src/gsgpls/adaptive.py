"""Validation-gated local search with an adaptive application probability.

A local search step is fitted on the fitting part of an inner split of the
training cases and kept only if it strictly lowers RMSE on the held-out
part.  The probability of attempting the step at all is the cumulative
acceptance rate of earlier generations, floored at ``p_min``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .dataset import InnerSplit, X2Empty
from .semops import Individual, rmse

__all__ = [
    "P_MIN",
    "GenState",
    "ls_probability",
    "attempt_local_search",
    "end_generation",
]

P_MIN = 0.01


@dataclass(frozen=True)
class GenState:
    n_acc_cumulative: int = 0
    n_total_cumulative: int = 0
    n_acc_current: int = 0
    n_current: int = 0
    p_min: float = P_MIN

    def __post_init__(self):
        if min(self.n_acc_cumulative, self.n_total_cumulative,
               self.n_acc_current, self.n_current) < 0:
            raise ValueError("GenState counters must be non-negative")
        if self.n_acc_cumulative > self.n_total_cumulative or self.n_acc_current > self.n_current:
            raise ValueError("accepted count exceeds attempted count")


def ls_probability(state: GenState) -> float:
    # no history yet: attempt local search unconditionally
    if state.n_total_cumulative == 0:
        return 1.0
    return max(state.p_min, state.n_acc_cumulative / state.n_total_cumulative)


def attempt_local_search(
    parent: Individual,
    step: Callable[[np.ndarray], Individual],
    inner: InnerSplit,
    targets,
    state: GenState,
) -> tuple[Individual, GenState]:
    """Run ``step(inner.x1)`` and keep its result only if it beats ``parent``
    on ``inner.x2``; ties keep the parent.

    Returns the surviving individual and the state with the current
    generation's counters advanced.
    """
    if len(inner.x2) == 0:
        raise X2Empty("validation part of the inner split is empty")
    candidate = step(inner.x1)
    accepted = rmse(candidate.semantics, targets, inner.x2) < rmse(
        parent.semantics, targets, inner.x2
    )
    state = replace(
        state,
        n_acc_current=state.n_acc_current + int(accepted),
        n_current=state.n_current + 1,
    )
    return (candidate if accepted else parent), state


def end_generation(state: GenState) -> GenState:
    return replace(
        state,
        n_acc_cumulative=state.n_acc_cumulative + state.n_acc_current,
        n_total_cumulative=state.n_total_cumulative + state.n_current,
        n_acc_current=0,
        n_current=0,
    )
