"""Smooth periodic step drive shifting the dressed cavity frequency."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ContractViolationError


@dataclass(frozen=True)
class DriveSchedule:
    """Cycle k starts its compression ramp at cycle_starts[k].

    Each cycle: ramp up over `tau`, hold f = 1 for `dt_hot`, ramp down over
    `tau`, then f = 0 (cold isochoric) until the next start.  `dt_cold` is the
    minimum cold duration used when start times are generated.
    """

    omega_eff_1: float
    omega_eff_2: float
    tau: float = 20.0
    dt_hot: float = 1500.0
    dt_cold: float = 1500.0
    cycle_starts: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "cycle_starts", tuple(float(t) for t in self.cycle_starts))
        problems = self.problems()
        if problems:
            raise ContractViolationError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if not self.delta_omega > 0:
            out.append("omega_eff_2 must exceed omega_eff_1")
        if not self.tau > 0:
            out.append("tau must be > 0")
        if not self.dt_hot > self.tau:
            out.append("dt_hot must exceed tau")
        if not self.dt_cold >= 0:
            out.append("dt_cold must be >= 0")
        starts = self.cycle_starts
        if any(t < 0 for t in starts):
            out.append("cycle start times must be >= 0")
        for a, b in zip(starts, starts[1:]):
            if not b - a > 2 * self.tau + self.dt_hot:
                out.append("consecutive cycle starts must be separated by more than 2*tau + dt_hot")
                break
        return out

    @property
    def delta_omega(self) -> float:
        return self.omega_eff_2 - self.omega_eff_1

    @property
    def n_cycles(self) -> int:
        return len(self.cycle_starts)

    @property
    def active_duration(self) -> float:
        return 2 * self.tau + self.dt_hot

    @property
    def period(self) -> float:
        return self.active_duration + self.dt_cold

    def with_start(self, t: float) -> "DriveSchedule":
        return replace(self, cycle_starts=self.cycle_starts + (float(t),))

    def uniform(self, first_start: float, n_cycles: int) -> "DriveSchedule":
        return replace(
            self, cycle_starts=tuple(first_start + k * self.period for k in range(n_cycles))
        )

    def stroke_bounds(self, k: int, cycle_end: float | None = None) -> dict[str, tuple[float, float]]:
        """Time intervals of the four strokes of cycle k, in time order."""
        t0 = self.cycle_starts[k]
        if cycle_end is None:
            if k + 1 < self.n_cycles:
                cycle_end = self.cycle_starts[k + 1]
            else:
                cycle_end = t0 + self.period
        t1 = t0 + self.tau
        t2 = t1 + self.dt_hot
        t3 = t2 + self.tau
        return {
            "compression": (t0, t1),
            "hot": (t1, t2),
            "expansion": (t2, t3),
            "cold": (t3, cycle_end),
        }


def _local(t: float, sched: DriveSchedule) -> float | None:
    """Time since the most recent cycle start, or None before the first."""
    k = bisect.bisect_right(sched.cycle_starts, t) - 1
    if k < 0:
        return None
    return t - sched.cycle_starts[k]


def f(t: float, sched: DriveSchedule) -> float:
    s = _local(t, sched)
    if s is None:
        return 0.0
    tau, hold = sched.tau, sched.dt_hot
    if s < tau:
        return math.sin(0.5 * math.pi * s / tau) ** 2
    if s < tau + hold:
        return 1.0
    if s < 2 * tau + hold:
        return math.cos(0.5 * math.pi * (s - tau - hold) / tau) ** 2
    return 0.0


def f_dot(t: float, sched: DriveSchedule) -> float:
    s = _local(t, sched)
    if s is None:
        return 0.0
    tau, hold = sched.tau, sched.dt_hot
    rate = 0.5 * math.pi / tau
    if s < tau:
        return rate * math.sin(math.pi * s / tau)
    if tau + hold <= s < 2 * tau + hold:
        return -rate * math.sin(math.pi * (s - tau - hold) / tau)
    return 0.0


def H_drive(t: float, sched: DriveSchedule, A: np.ndarray) -> np.ndarray:
    return f(t, sched) * sched.delta_omega * (A.conj().T @ A)
