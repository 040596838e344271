"""Duty-cycle bookkeeping for trial scheduling.

The apparatus runs at 10 Hz: each 100 ms cycle spends 97 ms preparing
the ensembles and 3 ms running entanglement attempts.  Because one
cycle is an exact multiple of the 20 ms line period, a sequence started
on a line trigger keeps every run window at the same 50 Hz phase; a
free-running sequence drifts, which is modeled as a uniformly random
window phase per cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MAINS_PERIOD_S = 0.02


class TimelineError(ValueError):
    """Raised for inconsistent duty-cycle settings."""


@dataclass(frozen=True)
class TrialTimeline:
    """Cycle structure and per-attempt delays.

    ``attempts_per_window`` is a chosen default (the attempt rate inside
    the 3 ms window is not a published number); it scales absolute
    rates only, never a figure of merit.
    """

    cycle_rate_hz: float = 10.0
    prep_s: float = 0.097
    window_s: float = 0.003
    attempts_per_window: int = 25
    distribution_delay_s: float = 103e-6
    analysis_delay_s: float = 5e-6
    mains_synced: bool = True

    def __post_init__(self) -> None:
        if self.cycle_rate_hz <= 0.0:
            raise TimelineError("cycle_rate_hz must be positive")
        if self.prep_s < 0.0 or self.window_s <= 0.0:
            raise TimelineError("prep_s and window_s must be positive")
        period = 1.0 / self.cycle_rate_hz
        if not math.isclose(self.prep_s + self.window_s, period,
                            rel_tol=1e-9, abs_tol=1e-12):
            raise TimelineError(
                f"prep {self.prep_s} s + window {self.window_s} s does not "
                f"fill the {period} s cycle"
            )
        if self.attempts_per_window < 1:
            raise TimelineError("attempts_per_window must be at least 1")
        if self.analysis_delay_s < 0.0 or self.analysis_delay_s > 5e-6:
            raise TimelineError("analysis_delay_s must be within [0, 5 us]")
        if self.distribution_delay_s < 0.0:
            raise TimelineError("distribution_delay_s must be non-negative")

    @property
    def cycle_period_s(self) -> float:
        return 1.0 / self.cycle_rate_hz

    @property
    def attempt_pitch_s(self) -> float:
        return self.window_s / self.attempts_per_window

    def attempts_per_second(self) -> float:
        return self.attempts_per_window * self.cycle_rate_hz


def schedule_trials(tl: TrialTimeline, n_cycles: int,
                    rng: np.random.Generator | None = None) -> np.ndarray:
    """Start times of every attempt over n_cycles duty cycles.

    Synced sequences open each run window at a fixed mains phase (the
    cycle is an integer number of line periods).  Free-running
    sequences get a uniformly random extra offset per cycle, modeling
    the drift of the window relative to the 50 Hz line; this path needs
    a random generator.
    """
    if n_cycles < 1:
        raise TimelineError("n_cycles must be at least 1")
    if not tl.mains_synced and rng is None:
        raise TimelineError("free-running schedules need a random generator")
    offsets = np.arange(tl.attempts_per_window) * tl.attempt_pitch_s
    starts = np.arange(n_cycles) * tl.cycle_period_s + tl.prep_s
    if not tl.mains_synced:
        starts = starts + rng.uniform(0.0, MAINS_PERIOD_S, size=n_cycles)
    return (starts[:, None] + offsets[None, :]).ravel()


def window_mains_phase(tl: TrialTimeline, times_s: np.ndarray,
                       phase_at_zero_rad: float = 0.0) -> np.ndarray:
    """Line phase at the given times (radians in [0, 2*pi))."""
    omega = 2.0 * math.pi / MAINS_PERIOD_S
    return np.mod(phase_at_zero_rad + omega * np.asarray(times_s),
                  2.0 * math.pi)


def cycles_for_trials(tl: TrialTimeline, n_trials: int) -> int:
    """Smallest cycle count whose windows hold n_trials attempts."""
    if n_trials < 1:
        raise TimelineError("n_trials must be at least 1")
    return -(-n_trials // tl.attempts_per_window)
