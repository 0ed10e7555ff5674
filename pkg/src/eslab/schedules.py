"""Step-size schedules with exact partial sums and admissibility checks.

Four schedules are provided; ``eta`` is the largest step of each:

* ``Constant``:   eta_k = eta
* ``Harmonic``:   eta_k = eta / (k + 1)
* ``Polynomial``: eta_k = eta * (k + 1)^(-alpha), alpha in (0, 1)
* ``Cosine``:     eta_k = eta * (1 + cos(pi k / horizon)) / 2, 0 <= k <= horizon

Partial sums are always computed by compensated summation of the actual
step values (``math.fsum``), never by integral approximations; asymptotic
formulas are checked against these exact sums elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "StepSchedule",
    "Constant",
    "Harmonic",
    "Polynomial",
    "Cosine",
    "step_size",
    "schedule_values",
    "partial_sums",
    "admissible",
]


class StepSchedule:
    eta: float

    @property
    def eta_max(self) -> float:
        """sup_k eta_k, which equals eta for all four variants."""
        return self.eta

    def _check_eta(self):
        if self.eta <= 0:
            raise ValueError("eta must be positive")

    def _check_k(self, k: int) -> int:
        k = int(k)
        if k < 0:
            raise ValueError("step index must be nonnegative")
        return k

    def step_size(self, k: int) -> float:
        raise NotImplementedError

    def values(self, count: int) -> np.ndarray:
        """eta_k for k = 0, ..., count-1."""
        count = int(count)
        if count < 1:
            raise ValueError("need at least one step")
        return self._values(count)

    def label(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(StepSchedule):
    eta: float

    def __post_init__(self):
        self._check_eta()

    def step_size(self, k):
        self._check_k(k)
        return self.eta

    def _values(self, count):
        return np.full(count, self.eta)

    def label(self):
        return f"constant(eta={self.eta:g})"


@dataclass(frozen=True)
class Harmonic(StepSchedule):
    eta: float

    def __post_init__(self):
        self._check_eta()

    def step_size(self, k):
        return self.eta / (self._check_k(k) + 1)

    def _values(self, count):
        return self.eta / (np.arange(count) + 1.0)

    def label(self):
        return f"harmonic(eta={self.eta:g})"


@dataclass(frozen=True)
class Polynomial(StepSchedule):
    eta: float
    alpha: float

    def __post_init__(self):
        self._check_eta()
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    def step_size(self, k):
        return self.eta * (self._check_k(k) + 1) ** (-self.alpha)

    def _values(self, count):
        return self.eta * (np.arange(count) + 1.0) ** (-self.alpha)

    def label(self):
        return f"polynomial(eta={self.eta:g},alpha={self.alpha:g})"


@dataclass(frozen=True)
class Cosine(StepSchedule):
    """Cosine annealing over a fixed horizon; defined for 0 <= k <= horizon."""

    eta: float
    horizon: int

    def __post_init__(self):
        self._check_eta()
        object.__setattr__(self, "horizon", int(self.horizon))
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")

    def step_size(self, k):
        k = self._check_k(k)
        if k > self.horizon:
            raise ValueError(f"cosine schedule is defined only for k <= {self.horizon}")
        return self.eta * 0.5 * (1.0 + math.cos(math.pi * k / self.horizon))

    def _values(self, count):
        if count > self.horizon:
            raise ValueError(
                f"requested {count} steps from a cosine schedule with horizon {self.horizon}"
            )
        return self.eta * 0.5 * (1.0 + np.cos(np.pi * np.arange(count) / self.horizon))

    def label(self):
        return f"cosine(eta={self.eta:g},horizon={self.horizon})"


def step_size(schedule: StepSchedule, k: int) -> float:
    return schedule.step_size(k)


def schedule_values(schedule: StepSchedule, count: int) -> np.ndarray:
    return schedule.values(count)


def partial_sums(schedule: StepSchedule, count: int) -> tuple[float, float]:
    """Exact (sum of eta_k, sum of eta_k^2) for k = 0, ..., count-1."""
    vals = schedule.values(count)
    return math.fsum(vals), math.fsum(vals * vals)


def admissible(schedule: StepSchedule, L: float, B: float) -> bool:
    """True iff eta_max < 2 / (L * B); vacuously true when B = 0."""
    if L <= 0:
        raise ValueError("smoothness constant must be positive")
    if B < 0:
        raise ValueError("B must be nonnegative")
    if B == 0:
        return True
    return schedule.eta_max < 2.0 / (L * B)
