"""Lifecycle-state classification, cultural memory and the preservation window."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ObserverLimitError, ValidationError
from .timeseries import PopulationSeries

STATES = ("Omega0", "Active", "Omega1", "Omega2", "Omega3")
# progression order; Omega0 sits outside the post-launch ordering used for backward flags
STATE_RANK = {"Omega0": 0, "Active": 1, "Omega1": 2, "Omega2": 3, "Omega3": 4}


@dataclass(frozen=True)
class LifecycleConfig:
    phi: float
    delta_coma: float = 90.0
    # fallback shutdown time when the series metadata carries none
    t_service: float | None = None

    def __post_init__(self) -> None:
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise ValidationError(f"phi must be positive, got {self.phi}")
        if not (self.delta_coma > 0 and math.isfinite(self.delta_coma)):
            raise ValidationError(f"delta_coma must be positive, got {self.delta_coma}")
        if self.t_service is not None and not math.isfinite(self.t_service):
            raise ValidationError("t_service must be finite when given")

    @classmethod
    def from_dict(cls, data: dict) -> LifecycleConfig:
        unknown = set(data) - {"phi", "delta_coma", "t_service"}
        if unknown:
            raise ValidationError(f"unknown config field(s): {sorted(unknown)}")
        if "phi" not in data:
            raise ValidationError("config.phi is required")
        return cls(
            phi=float(data["phi"]),
            delta_coma=float(data.get("delta_coma", 90.0)),
            t_service=None if data.get("t_service") is None else float(data["t_service"]),
        )


@dataclass(frozen=True)
class LifecycleState:
    state: str
    evidence: str
    as_of: float

    def to_dict(self) -> dict:
        return {"state": self.state, "evidence": self.evidence, "as_of": self.as_of}


def _shutdown(series: PopulationSeries, config: LifecycleConfig) -> float | None:
    return series.t_shutdown if series.t_shutdown is not None else config.t_service


def classify(series: PopulationSeries, config: LifecycleConfig, as_of: float) -> LifecycleState:
    """State of the title at ``as_of`` from the latest observation at or before it.

    Rules are tried in order: shutdown, pre-launch, long zero run, below
    critical mass, at or above critical mass. Without launch metadata a query
    before the first observation is refused: in-world observables alone
    cannot tell a not-yet-populated world from an abandoned one.
    """
    if len(series) == 0:
        raise ValidationError("cannot classify an empty series")
    t_off = _shutdown(series, config)
    if t_off is not None and as_of >= t_off:
        return LifecycleState("Omega3", f"servers shut down at t={t_off:g}; the state is absorbing", as_of)
    if series.t_launch is not None and as_of < series.t_launch:
        return LifecycleState("Omega0", f"before launch at t={series.t_launch:g}", as_of)
    times = series.times
    i = bisect.bisect_right(times, as_of) - 1
    if i < 0:
        if series.t_launch is None:
            raise ObserverLimitError(
                f"t={as_of:g} precedes the first observation and no launch time is known; "
                "an empty pre-launch world and an abandoned one look identical from player counts alone"
            )
        raise ValidationError(f"no observation at or before t={as_of:g}")
    pop = series.players[i]
    if pop == 0:
        j = i
        while j > 0 and series.players[j - 1] == 0:
            j -= 1
        run = as_of - times[j]
        if run > config.delta_coma:
            return LifecycleState(
                "Omega2", f"zero players since t={times[j]:g} ({run:g} d > {config.delta_coma:g} d)", as_of
            )
        return LifecycleState(
            "Omega1", f"zero players for {run:g} d, within the {config.delta_coma:g} d coma threshold", as_of
        )
    if pop < config.phi:
        return LifecycleState("Omega1", f"population {pop:g} below critical mass {config.phi:g}", as_of)
    return LifecycleState("Active", f"population {pop:g} at or above critical mass {config.phi:g}", as_of)


@dataclass(frozen=True)
class StateInterval:
    start: float
    end: float
    state: str
    evidence: str
    backward_transition: bool = False

    def to_dict(self) -> dict:
        out = {"start": self.start, "end": self.end, "state": self.state, "evidence": self.evidence}
        if self.backward_transition:
            out["annotation"] = "exogenous intervention: backward transition"
        return out


def classify_trajectory(series: PopulationSeries, config: LifecycleConfig) -> list[StateInterval]:
    """Maximal constant-state intervals over the observed span.

    A move back to an earlier post-launch state (for instance a relaunch
    lifting a dormant title back above critical mass) is annotated rather
    than rejected.
    """
    if len(series) == 0:
        raise ValidationError("cannot classify an empty series")
    points = list(series.times)
    t_off = _shutdown(series, config)
    if t_off is not None and t_off > points[-1]:
        points.append(t_off)
    states = [classify(series, config, t) for t in points]

    groups: list[list] = []
    for t, s in zip(points, states):
        if groups and groups[-1][2].state == s.state:
            continue
        groups.append([t, t, s])
    out: list[StateInterval] = []
    for k, (start, _, s) in enumerate(groups):
        end = groups[k + 1][0] if k + 1 < len(groups) else points[-1]
        back = False
        if k > 0:
            prev, cur = STATE_RANK[groups[k - 1][2].state], STATE_RANK[s.state]
            back = prev >= 1 and cur >= 1 and cur < prev
        out.append(StateInterval(start, end, s.state, s.evidence, back))
    return out


def backward_transitions(intervals: list[StateInterval]) -> int:
    return sum(iv.backward_transition for iv in intervals)


# --------------------------------------------------------------------------- cultural memory


class Trajectory(NamedTuple):
    t: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class MemoryModel:
    """Exponentially forgotten recruitment.

    With ``recruitment=None`` the recruitment rate is the positive part of
    the (optionally smoothed) population increments and the first observed
    population counts as the founding cohort. This undercounts inflow that
    merely replaces churned players. An explicit ``recruitment`` callable
    gives new players per day and starts memory at zero.
    """

    nu: float
    recruitment: Callable[[float], float] | None = None
    smoothing_window: int = 1

    def __post_init__(self) -> None:
        if not (self.nu >= 0 and not math.isnan(self.nu)):
            raise ValidationError(f"nu must be >= 0, got {self.nu}")
        if self.smoothing_window < 1:
            raise ValidationError("smoothing_window must be >= 1")


def memory_trajectory(series: PopulationSeries, model: MemoryModel) -> Trajectory:
    """Recruitment integral with exponential forgetting, trapezoidal on the series grid."""
    if len(series) == 0:
        raise ValidationError("memory needs a non-empty series")
    t = series.t
    mem = np.empty_like(t)
    nu = model.nu
    if model.recruitment is None:
        pop = series.p
        if model.smoothing_window > 1:
            w = model.smoothing_window
            pop = np.convolve(pop, np.ones(w), "same") / np.convolve(np.ones_like(pop), np.ones(w), "same")
        gains = np.maximum(np.diff(pop), 0.0)
        mem[0] = pop[0]
        for i in range(1, t.size):
            decay = math.exp(-nu * (t[i] - t[i - 1])) if math.isfinite(nu) else 0.0
            mem[i] = mem[i - 1] * decay + gains[i - 1] * (1.0 + decay) / 2.0
    else:
        rate = [float(model.recruitment(x)) for x in t]
        mem[0] = 0.0
        for i in range(1, t.size):
            dt = t[i] - t[i - 1]
            decay = math.exp(-nu * dt) if math.isfinite(nu) else 0.0
            mem[i] = mem[i - 1] * decay + 0.5 * dt * (rate[i - 1] * decay + rate[i])
    return Trajectory(t, mem)


def nostalgia_inversion(pop: Trajectory, memory: Trajectory) -> float | None:
    """Earliest grid time from which memory exceeds population at every later grid point.

    The for-all is checked only up to the last grid point, so the answer is
    conditional on the observed horizon. None when memory does not exceed
    population at the final point.
    """
    tp, p = np.asarray(pop[0], float), np.asarray(pop[1], float)
    tm, m = np.asarray(memory[0], float), np.asarray(memory[1], float)
    if tp.shape != tm.shape or not np.array_equal(tp, tm) or p.shape != tp.shape or m.shape != tm.shape:
        raise ValidationError("population and memory must share the same grid")
    if tp.size == 0:
        return None
    above = m > p
    if not above[-1]:
        return None
    failing = np.nonzero(~above)[0]
    first = failing[-1] + 1 if failing.size else 0
    return float(tp[first])


@dataclass(frozen=True)
class PreservationWindow:
    t_psi: float | None
    t_omega3: float | None
    status: str  # closed | open | closed_before_opening | not_reached

    def to_dict(self) -> dict:
        return {
            "psi": self.t_psi,
            "t_omega3": self.t_omega3,
            "window_status": self.status,
            "horizon_conditional": True,
        }


def preservation_window(psi: float | None, t_omega3: float | None) -> PreservationWindow:
    """``[psi, t_omega3]``; right-open while servers run.

    ``psi > t_omega3`` is reported as ``closed_before_opening`` instead of
    being clamped; a missing ``psi`` gives ``not_reached``.
    """
    if psi is None:
        return PreservationWindow(None, t_omega3, "not_reached")
    if t_omega3 is None:
        return PreservationWindow(psi, None, "open")
    if psi > t_omega3:
        return PreservationWindow(psi, t_omega3, "closed_before_opening")
    return PreservationWindow(psi, t_omega3, "closed")
