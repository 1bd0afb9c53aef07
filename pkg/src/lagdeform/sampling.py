"""Guarded sampling of phase points inside the declared chart box.

The theorem hypotheses S(L) != 0 and C(L) != 0 are open conditions; the
faithful numeric reading is to sample away from their zero sets, rejecting
points that land within ``guard_eps`` or that violate the domain of any
expression involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import expressions as ex
from .geometry import PhasePoint, ScalarField


class SamplingError(Exception):
    pass


class TooManyRejections(SamplingError):
    """Sampling could not reach the requested count: the guard functions or
    domains exclude essentially the whole box (degenerate problem)."""

    def __init__(self, accepted: int, attempted: int, requested: int):
        super().__init__(
            f"accepted {accepted}/{requested} points after {attempted} attempts"
        )
        self.accepted = accepted
        self.attempted = attempted
        self.requested = requested


class GuardViolation(SamplingError):
    def __init__(self, name: str, value: float, eps: float):
        super().__init__(f"|{name}| = {abs(value):.3e} <= guard {eps:.1e}")
        self.name = name
        self.value = value


@dataclass(frozen=True)
class SamplePlan:
    """Box bounds per coordinate, sample count, seed and guard settings."""

    bounds: dict
    count: int
    seed: int
    guard_eps: float = 1e-6
    max_reject_ratio: float = 0.98

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("sample count must be >= 1")
        if self.guard_eps <= 0:
            raise ValueError("guard threshold must be positive")
        if not 0.0 <= self.max_reject_ratio < 1.0:
            raise ValueError("max_reject_ratio must lie in [0, 1)")
        for name, (lo, hi) in self.bounds.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"degenerate bounds for {name}: [{lo}, {hi}]")

    @property
    def dimension(self) -> int:
        n = len(self.bounds) // 2
        expected = set(ex.chart_names(n))
        if set(self.bounds) != expected:
            raise ValueError(
                f"bounds must cover exactly x1..x{n}, y1..y{n}; got {sorted(self.bounds)}"
            )
        return n


@dataclass(frozen=True)
class Guards:
    """Fields that must stay away from zero, and expressions that must be
    evaluable, for a point to be accepted."""

    nonzero: tuple = ()
    evaluable: tuple = ()

    def admits(self, point: PhasePoint, params: Optional[dict], eps: float) -> bool:
        binding = point.binding(params)
        try:
            for e in self.evaluable:
                v = ex.evaluate(e, binding)
                if not math.isfinite(v):
                    return False
            for f in self.nonzero:
                v = ex.evaluate(f.expr, binding)
                if not math.isfinite(v) or abs(v) <= eps:
                    return False
        except ex.DomainViolation:
            return False
        return True


def draw_samples(
    plan: SamplePlan, guards: Guards, params: Optional[dict] = None
) -> list:
    """Draw exactly ``plan.count`` guard-admissible points, deterministically
    for a fixed seed. Raises :class:`TooManyRejections` if the acceptance
    ratio falls below the plan threshold."""
    n = plan.dimension
    rng = np.random.default_rng(plan.seed)
    names = ex.chart_names(n)
    lows = np.array([plan.bounds[v][0] for v in names])
    highs = np.array([plan.bounds[v][1] for v in names])

    budget = max(64, int(math.ceil(plan.count / (1.0 - plan.max_reject_ratio))))
    accepted = []
    attempts = 0
    while len(accepted) < plan.count:
        if attempts >= budget:
            raise TooManyRejections(len(accepted), attempts, plan.count)
        draw = rng.uniform(lows, highs)
        attempts += 1
        point = PhasePoint(draw[:n], draw[n:])
        if guards.admits(point, params, plan.guard_eps):
            accepted.append(point)
    return accepted


def box_random_binding(rng, bounds: dict) -> dict:
    return {name: rng.uniform(lo, hi) for name, (lo, hi) in bounds.items()}
