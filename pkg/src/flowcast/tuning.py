"""Seeded hyperparameter search over declarative parameter spaces.

Both searches return every trial plus the best one (minimum objective,
ties to the earliest trial). Random search fixes the full trial ->
parameter mapping from the seed before any evaluation, so evaluating
trials in parallel cannot change which parameters are tried.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, IO, List, Sequence, Tuple, Union

from .errors import FlowcastError
from .rng import make_rng

__all__ = [
    "IntRange",
    "RealRange",
    "Categorical",
    "ParamSpace",
    "TrialRecord",
    "grid_search",
    "random_search",
    "write_trials_csv",
]


@dataclass(frozen=True)
class IntRange:
    """Integers lo..hi inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.hi < self.lo:
            raise FlowcastError("bad-parameter", "empty integer range")

    def grid(self):
        return range(self.lo, self.hi + 1)

    def draw(self, rng):
        return int(rng.integers(self.lo, self.hi + 1))


@dataclass(frozen=True)
class RealRange:
    """Continuous uniform (or log-uniform) interval; random search only."""

    lo: float
    hi: float
    log: bool = False

    def __post_init__(self):
        if self.hi < self.lo:
            raise FlowcastError("bad-parameter", "empty real range")
        if self.log and self.lo <= 0:
            raise FlowcastError("bad-parameter", "log-uniform needs positive bounds")

    def grid(self):
        raise FlowcastError("non-finite-grid", "real range has no finite grid")

    def draw(self, rng):
        if self.log:
            return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))
        return float(rng.uniform(self.lo, self.hi))


@dataclass(frozen=True)
class Categorical:
    """Explicit finite set (also how real grids are declared)."""

    choices: tuple

    def __post_init__(self):
        if len(self.choices) == 0:
            raise FlowcastError("bad-parameter", "empty categorical set")
        object.__setattr__(self, "choices", tuple(self.choices))

    def grid(self):
        return self.choices

    def draw(self, rng):
        return self.choices[int(rng.integers(0, len(self.choices)))]


Dimension = Union[IntRange, RealRange, Categorical]


@dataclass(frozen=True)
class ParamSpace:
    """Named dimensions; declaration order fixes enumeration/draw order."""

    dimensions: dict

    def names(self) -> Tuple[str, ...]:
        return tuple(self.dimensions.keys())


@dataclass
class TrialRecord:
    trial_id: int
    params: dict
    objective: float
    wall_time: float
    failed: bool = False


def _run_trial(trial_id: int, params: dict, objective: Callable) -> TrialRecord:
    t0 = time.perf_counter()
    failed = False
    try:
        value = float(objective(**params))
        if not math.isfinite(value):
            failed = True
            value = math.inf
    except (FlowcastError, ValueError, ArithmeticError):
        failed = True
        value = math.inf
    wall = time.perf_counter() - t0
    return TrialRecord(trial_id=trial_id, params=dict(params),
                       objective=value, wall_time=wall, failed=failed)


def _best(trials: List[TrialRecord]) -> TrialRecord:
    live = [t for t in trials if not t.failed]
    if not live:
        raise FlowcastError("no-successful-trial", "every trial failed")
    return min(live, key=lambda t: (t.objective, t.trial_id))


def grid_search(space: ParamSpace, objective: Callable):
    """Evaluate the full Cartesian product of finite dimensions once each."""
    names = space.names()
    grids = [space.dimensions[n].grid() for n in names]
    trials = []
    for trial_id, combo in enumerate(itertools.product(*grids)):
        trials.append(_run_trial(trial_id, dict(zip(names, combo)), objective))
    if not trials:
        raise FlowcastError("empty-input", "empty search space")
    return _best(trials), trials


def random_search(space: ParamSpace, budget: int, seed: int, objective: Callable):
    """Exactly ``budget`` independent seeded draws, uniform per dimension."""
    if budget < 1:
        raise FlowcastError("bad-parameter", "budget must be >= 1")
    names = space.names()
    rng = make_rng(seed)
    assignments = [
        {n: space.dimensions[n].draw(rng) for n in names} for _ in range(budget)
    ]
    trials = [_run_trial(i, params, objective) for i, params in enumerate(assignments)]
    return _best(trials), trials


def write_trials_csv(trials: Sequence[TrialRecord], out: IO) -> None:
    """Stream trial logs as ``trial_id,param...,objective,wall_time``."""
    if not trials:
        return
    names = list(trials[0].params.keys())
    out.write(",".join(["trial_id", *names, "objective", "wall_time"]) + "\n")
    for t in trials:
        row = [str(t.trial_id)]
        row += [str(t.params[n]) for n in names]
        row.append("failed" if t.failed else repr(t.objective))
        row.append(f"{t.wall_time:.6f}")
        out.write(",".join(row) + "\n")
