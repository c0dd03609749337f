"""Seeded Monte Carlo rollouts of executable strategies.

Primitive draws are exact: each marginal is sampled by drawing an integer
uniformly below the common denominator and walking the cumulative
numerators, so the sampled law equals the declared rational law and no
float enters the episode itself.  Floats appear only in the report, where
exact Fractions are rounded to the nearest double.

Determinism contract: episode e uses `random.Random(f"{seed}:{e}")`, whose
string seeding is the stable SHA-512 based scheme, so identical
(seed, episodes, strategy, model) produce byte-identical reports on any
platform, and episodes can be generated independently (hence in parallel)
without changing the stream.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .info import InfoStructure
from .model import Dist, TeamModel, format_ratio
from .oracle import trajectory

__all__ = ["RolloutConfig", "Report", "rollout"]


@dataclass(frozen=True)
class RolloutConfig:
    seed: int
    episodes: int

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")


@dataclass(frozen=True)
class Report:
    episodes: int
    seed: int
    mean_cost: float
    stderr: float
    exact_value: Fraction | None
    per_time_mean: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "episodes": self.episodes,
            "seed": self.seed,
            "mean_cost": self.mean_cost,
            "stderr": self.stderr,
            "exact_value": None if self.exact_value is None else format_ratio(self.exact_value),
            "per_time_mean": list(self.per_time_mean),
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()


class _Sampler:
    """Exact categorical sampler: integer thresholds under one denominator."""

    def __init__(self, dist: Dist):
        denom = math.lcm(*(w.denominator for w in dist.weights))
        acc = 0
        self.thresholds = []
        for w in dist.weights:
            acc += w.numerator * (denom // w.denominator)
            self.thresholds.append(acc)
        self.denom = denom

    def draw(self, rng: random.Random) -> int:
        r = rng.randrange(self.denom)
        for i, threshold in enumerate(self.thresholds):
            if r < threshold:
                return i
        raise AssertionError("thresholds must cover the denominator")


def rollout(
    model: TeamModel,
    info: InfoStructure,
    strategy,
    config: RolloutConfig,
    exact_value: Fraction | None = None,
) -> Report:
    """Estimate the expected total cost of a strategy-like object.

    Draw order within an episode is fixed (initial state, time-0 noises,
    then disturbance and next noises per step) so seeds pin trajectories.
    """
    T = model.horizon
    x0_sampler = _Sampler(model.x0_dist)
    w_samplers = [_Sampler(model.w_dist(t)) for t in range(T)]
    v1_samplers = [_Sampler(model.v_dist(1, t)) for t in range(T + 1)]
    v2_samplers = [_Sampler(model.v_dist(2, t)) for t in range(T + 1)]

    # trajectories are deterministic given (strategy, draw), so tally how
    # often each draw occurs and do the exact arithmetic once per draw
    counts: dict = {}
    for episode in range(config.episodes):
        rng = random.Random(f"{config.seed}:{episode}")
        x0 = x0_sampler.draw(rng)
        v1s = [v1_samplers[0].draw(rng)]
        v2s = [v2_samplers[0].draw(rng)]
        ws = []
        for t in range(T):
            ws.append(w_samplers[t].draw(rng))
            v1s.append(v1_samplers[t + 1].draw(rng))
            v2s.append(v2_samplers[t + 1].draw(rng))
        omega = (x0, tuple(ws), tuple(v1s), tuple(v2s))
        counts[omega] = counts.get(omega, 0) + 1

    n = config.episodes
    per_time_sum = [Fraction(0)] * (T + 1)
    total_sum = Fraction(0)
    squares = Fraction(0)
    for omega, count in counts.items():
        costs = trajectory(model, info, strategy, omega).stage_costs
        total = sum(costs, Fraction(0))
        total_sum += count * total
        squares += count * total * total
        for t, c in enumerate(costs):
            per_time_sum[t] += count * c
    mean_exact = total_sum / n
    if n > 1:
        var_exact = (squares - n * mean_exact * mean_exact) / (n * (n - 1))
        stderr = math.sqrt(var_exact)
    else:
        stderr = 0.0
    return Report(
        episodes=n,
        seed=config.seed,
        mean_cost=float(mean_exact),
        stderr=stderr,
        exact_value=exact_value,
        per_time_mean=tuple(float(s / n) for s in per_time_sum),
    )
