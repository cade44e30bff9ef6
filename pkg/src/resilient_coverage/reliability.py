"""Reliability model for heterogeneous robots.

A robot's instantaneous failure rate grows quadratically with age,
``lam(tau) = hazard_base + hazard_quad * tau**2``, so the probability of
surviving an age interval [t0, t1] has the closed form

    R(t0, t1) = exp(-(hazard_base*(t1 - t0) + hazard_quad*(t1**3 - t0**3)/3))

Failure times are the complement, and independent across robots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_AREA_TOL = 1e-9


class InvalidInterval(ValueError):
    """Time interval with t1 < t0."""


class AllWeightsZero(RuntimeError):
    """Roulette selection found no robot with positive failure probability."""


@dataclass(frozen=True)
class RobotSpec:
    """Static attributes of one robot.

    ``sense_area`` must equal ``pi * sense_radius**2``; ``lifespan`` is
    generator metadata (the age at which survival drops to 1/e).
    """

    id: int
    cost: float
    sense_radius: float
    sense_area: float
    decay: float
    hazard_base: float
    hazard_quad: float
    lifespan: float

    def __post_init__(self):
        if self.cost <= 0:
            raise ValueError("cost must be positive")
        if self.sense_radius <= 0:
            raise ValueError("sense_radius must be positive")
        if abs(self.sense_area - math.pi * self.sense_radius**2) > _AREA_TOL:
            raise ValueError("sense_area must equal pi * sense_radius**2")
        if self.decay < 0:
            raise ValueError("decay must be nonnegative")
        if self.hazard_base < 0 or self.hazard_quad < 0:
            raise ValueError("hazard parameters must be nonnegative")
        if self.lifespan <= 0:
            raise ValueError("lifespan must be positive")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "cost": self.cost,
            "sense_radius": self.sense_radius,
            "sense_area": self.sense_area,
            "decay": self.decay,
            "hazard_base": self.hazard_base,
            "hazard_quad": self.hazard_quad,
            "lifespan": self.lifespan,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "RobotSpec":
        return cls(
            id=int(doc["id"]),
            cost=float(doc["cost"]),
            sense_radius=float(doc["sense_radius"]),
            sense_area=float(doc["sense_area"]),
            decay=float(doc["decay"]),
            hazard_base=float(doc["hazard_base"]),
            hazard_quad=float(doc["hazard_quad"]),
            lifespan=float(doc["lifespan"]),
        )

    def interchangeable_with(self, other: "RobotSpec") -> bool:
        """True when the two robots differ at most in id."""
        return (
            self.cost == other.cost
            and self.sense_radius == other.sense_radius
            and self.sense_area == other.sense_area
            and self.decay == other.decay
            and self.hazard_base == other.hazard_base
            and self.hazard_quad == other.hazard_quad
            and self.lifespan == other.lifespan
        )


@dataclass(frozen=True)
class FailureEvent:
    robot_id: int
    time: float


def reliability(spec: RobotSpec, t0: float, t1: float) -> float:
    """Probability the robot operates successfully over ages [t0, t1]."""
    if t0 < 0:
        raise InvalidInterval("t0 must be nonnegative")
    if t1 < t0:
        raise InvalidInterval(f"interval [{t0}, {t1}] is reversed")
    integral = spec.hazard_base * (t1 - t0) + spec.hazard_quad * (t1**3 - t0**3) / 3.0
    return math.exp(-integral)


def failure_probability(spec: RobotSpec, t0: float, t1: float) -> float:
    """Probability the robot fails somewhere in [t0, t1]."""
    return 1.0 - reliability(spec, t0, t1)


def team_failure_probability(team: Iterable[RobotSpec], t0: float, t1: float) -> float:
    """Probability that every robot in the team fails during [t0, t1].

    Failures are independent; the empty team fails vacuously (probability 1).
    """
    prob = 1.0
    for spec in team:
        prob *= failure_probability(spec, t0, t1)
    return prob


def fit_hazard(lifespan: float) -> tuple[float, float]:
    """Calibrate (hazard_base, hazard_quad) from a nominal lifespan.

    The baseline rate is fixed at 0.1/lifespan and the quadratic term is
    solved so that survival over one full lifespan is exactly 1/e.
    """
    if lifespan <= 0:
        raise ValueError("lifespan must be positive")
    lam0 = 0.1 / lifespan
    k = 3.0 * (1.0 - lam0 * lifespan) / lifespan**3
    return lam0, k


def roulette_pick(
    active: Sequence[tuple[RobotSpec, float]], time: float, rng: np.random.Generator
) -> int | None:
    """Pick an active robot with probability proportional to its cumulative
    failure probability from activation up to ``time``.

    ``active`` pairs each spec with its activation time.  Returns the
    robot id, or None when every weight is zero.
    """
    weights = []
    for spec, activation in active:
        if time <= activation:
            weights.append(0.0)
        else:
            weights.append(failure_probability(spec, 0.0, time - activation))
    total = sum(weights)
    if total <= 0.0:
        return None
    u = rng.uniform(0.0, total)
    acc = 0.0
    for (spec, _), w in zip(active, weights):
        acc += w
        if u <= acc:
            return spec.id
    return active[-1][0].id


def sample_failure(
    active: Sequence[tuple[RobotSpec, float]],
    horizon: float,
    rng: np.random.Generator,
    max_retries: int = 16,
) -> FailureEvent:
    """Draw one failure event: a uniform time on (0, horizon), then a
    roulette-wheel choice among the active robots weighted by their
    failure probabilities at that time.

    Retries the time draw a bounded number of times when all weights are
    zero (e.g. the instant falls before every activation), then raises
    AllWeightsZero.
    """
    if not active:
        raise ValueError("no active robots to sample from")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    for _ in range(max_retries):
        t = float(rng.uniform(0.0, horizon))
        if t == 0.0:
            continue
        picked = roulette_pick(active, t, rng)
        if picked is not None:
            return FailureEvent(robot_id=picked, time=t)
    raise AllWeightsZero("every active robot has zero failure probability")
