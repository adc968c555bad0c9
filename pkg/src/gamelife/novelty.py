"""Content, exposure and novelty bookkeeping, plus the coupled lifecycle simulator.

Novelty is the stock of designed content not yet consumed,
``N(t) = C(t) - eta * E(t)``, where ``E`` is cumulative player-hours. While
novelty remains the population follows logistic growth; once it is used up
the population decays at ``mu0 * (1 + kappa * |N|)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import ValidationError
from .models import LogisticParams, eval_logistic

REFINE_TOL = 1e-6  # days


@dataclass(frozen=True)
class ContentSchedule:
    """Piecewise-constant production rate with a finite total content cap.

    ``segments`` holds ``(t_start, rate)`` pairs; each rate holds until the
    next segment starts, the last one indefinitely. Production stops once
    the cap is reached. Launch content is modelled as a short high-rate
    opening segment, e.g. ``[(0, 1000), (1, 0)]`` for 1000 units at launch.
    """

    segments: tuple[tuple[float, float], ...]
    cap: float

    def __post_init__(self) -> None:
        segs = tuple((float(t), float(r)) for t, r in self.segments)
        object.__setattr__(self, "segments", segs)
        if not math.isfinite(self.cap):
            raise ValidationError("content cap must be finite")
        if self.cap < 0:
            raise ValidationError("content cap must be >= 0")
        if not segs:
            raise ValidationError("content schedule needs at least one segment")
        for t, r in segs:
            if not (math.isfinite(t) and t >= 0):
                raise ValidationError(f"segment start must be finite and >= 0, got {t}")
            if not (math.isfinite(r) and r >= 0):
                raise ValidationError(f"content rate must be finite and >= 0, got {r}")
        for (a, _), (b, _) in zip(segs, segs[1:]):
            if not b > a:
                raise ValidationError("segment start times must be strictly increasing")

    @classmethod
    def from_dict(cls, data: dict) -> ContentSchedule:
        return cls(segments=tuple(tuple(s) for s in data["segments"]), cap=float(data["cap"]))

    def to_dict(self) -> dict:
        return {"segments": [list(s) for s in self.segments], "cap": self.cap}


def cumulative_content(schedule: ContentSchedule, t: float) -> float:
    """Integral of the production rate over [0, t], clamped at the cap."""
    if t < 0:
        raise ValidationError("content is defined for t >= 0")
    total = 0.0
    segs = schedule.segments
    for i, (start, rate) in enumerate(segs):
        if t <= start:
            break
        end = segs[i + 1][0] if i + 1 < len(segs) else math.inf
        total += rate * (min(t, end) - start)
        if total >= schedule.cap:
            return schedule.cap
    return min(total, schedule.cap)


def exposure(times: Sequence[float], pops: Sequence[float], h_bar: float, t: float) -> float:
    """Cumulative player-hours ``integral of pop * h_bar`` from the first sample to ``t`` (trapezoid)."""
    times = np.asarray(times, dtype=float)
    pops = np.asarray(pops, dtype=float)
    if times.size == 0 or t < times[0] or t > times[-1]:
        raise ValidationError(f"t={t} lies outside the trajectory domain")
    inside = times < t
    ts = np.append(times[inside], t)
    ps = np.append(pops[inside], np.interp(t, times, pops))
    return float(h_bar * integrate.trapezoid(ps, ts))


def novelty(C: float, eta: float, E: float) -> float:
    return C - eta * E


@dataclass(frozen=True)
class NoveltyParams:
    eta: float  # content-units per player-hour
    h_bar: float  # hours per player per day
    mu0: float  # 1/day
    kappa: float  # 1/content-unit; zero gives a constant post-exhaustion rate

    def __post_init__(self) -> None:
        for name in ("eta", "h_bar", "mu0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be positive, got {value}")
        if not (self.kappa >= 0 and math.isfinite(self.kappa)):
            raise ValidationError(f"kappa must be >= 0, got {self.kappa}")


def coupled_decay_rate(params: NoveltyParams, N: float) -> float:
    if N > 0:
        return 0.0
    return params.mu0 * (1.0 + params.kappa * abs(N))


@dataclass(frozen=True)
class LifecycleSimResult:
    # rows of (t, pop, C, E, N, mu)
    trajectory: tuple[tuple[float, float, float, float, float, float], ...]
    t_novelty_exhaustion: float | None
    t_star: float | None
    terminal_reason: str  # phi_crossing | service_horizon | horizon_end
    never_viable: bool = False

    def column(self, name: str) -> np.ndarray:
        idx = ("t", "pop", "C", "E", "N", "mu").index(name)
        return np.array([row[idx] for row in self.trajectory])

    def summary(self) -> dict:
        return {
            "t_novelty_exhaustion": self.t_novelty_exhaustion,
            "t_star": self.t_star,
            "terminal_reason": self.terminal_reason,
            "never_viable": self.never_viable,
        }

    def to_csv(self) -> str:
        lines = ["t,pop,C,E,N,mu"] + [",".join(repr(float(v)) for v in row) for row in self.trajectory]
        return "\n".join(lines) + "\n"


def _bisect(lo: float, hi: float, holds: Callable[[float], bool]) -> float:
    """Earliest point (to REFINE_TOL) in (lo, hi] where ``holds`` is true; ``holds(hi)`` must be."""
    while hi - lo > REFINE_TOL:
        mid = 0.5 * (lo + hi)
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return hi


def simulate_lifecycle(
    growth: LogisticParams,
    schedule: ContentSchedule,
    nparams: NoveltyParams,
    phi: float,
    t_service: float | None = None,
    step: float = 0.1,
    horizon: float = 3650.0,
) -> LifecycleSimResult:
    """Co-integrate population, content, exposure and novelty from t = 0.

    Growth follows the logistic closed form while novelty is positive; from
    the first exhaustion onward the population obeys ``dP/dt = -mu(t) P``
    with ``mu`` from :func:`coupled_decay_rate`. Exposure is integrated with
    RK4 (Simpson's rule during growth). Novelty exhaustion, later sign
    changes of novelty and the downward crossing of ``phi`` are bisected
    between grid points to 1e-6 day. A
    finite ``t_service`` ends the run with ``t_star = t_service`` unless the
    population crossed below ``phi`` earlier.
    """
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step}")
    if not horizon > 0:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    if step > horizon:
        raise ValidationError(f"step {step} exceeds horizon {horizon}")
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    if t_service is not None and not t_service > 0:
        raise ValidationError(f"t_service must be positive, got {t_service}")

    eta, h_bar = nparams.eta, nparams.h_bar

    def content(t: float) -> float:
        return cumulative_content(schedule, t)

    def sample(t: float, pop: float, E: float) -> tuple:
        C = content(t)
        N = novelty(C, eta, E)
        return (t, pop, C, E, N, coupled_decay_rate(nparams, N))

    def logistic(t: float) -> float:
        return float(eval_logistic(growth, t))

    def grow(t: float, pop: float, E: float, h: float) -> tuple[float, float]:
        mid = logistic(t + 0.5 * h)
        end = logistic(t + h)
        return end, E + h * h_bar * (logistic(t) + 4.0 * mid + end) / 6.0

    def decay_rhs(t: float, pop: float, E: float, fresh: bool) -> tuple[float, float]:
        # the rate stays in the regime the step started in; sign changes are located as events
        mu = 0.0 if fresh else nparams.mu0 * (1.0 - nparams.kappa * novelty(content(t), eta, E))
        return -mu * pop, h_bar * pop

    def decay(t: float, pop: float, E: float, h: float) -> tuple[float, float]:
        fresh = novelty(content(t), eta, E) > 0
        k1 = decay_rhs(t, pop, E, fresh)
        k2 = decay_rhs(t + h / 2, pop + h / 2 * k1[0], E + h / 2 * k1[1], fresh)
        k3 = decay_rhs(t + h / 2, pop + h / 2 * k2[0], E + h / 2 * k2[1], fresh)
        k4 = decay_rhs(t + h, pop + h * k3[0], E + h * k3[1], fresh)
        return (
            pop + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            E + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        )

    pop0 = logistic(0.0)
    rows = [sample(0.0, pop0, 0.0)]
    if phi >= growth.K:
        return LifecycleSimResult(tuple(rows), None, 0.0, "phi_crossing", never_viable=True)

    end = horizon if t_service is None else min(horizon, t_service)
    t, pop, E = 0.0, pop0, 0.0
    growing = True
    viable = pop0 >= phi
    t_n = t_star = None
    reason = None
    k = 0  # steps taken since the current phase started
    t_phase = 0.0

    while reason is None:
        t_next = min(t_phase + (k + 1) * step, end)
        h = t_next - t
        if h <= 0:
            break
        advance = grow if growing else decay
        pop_new, E_new = advance(t, pop, E, h)

        if growing and novelty(content(t_next), eta, E_new) <= 0:
            t0, p0, e0 = t, pop, E

            def exhausted(s: float) -> bool:
                _, e = grow(t0, p0, e0, s - t0)
                return novelty(content(s), eta, e) <= 0

            t_n = _bisect(t0, t_next, exhausted)
            pop, E = grow(t0, p0, e0, t_n - t0)
            t = t_n
            rows.append(sample(t, pop, E))
            growing = False
            t_phase, k = t, 0
            if not viable:
                t_star, reason = 0.0, "phi_crossing"
            continue

        if not growing:
            t0, p0, e0 = t, pop, E
            fresh = novelty(content(t0), eta, e0) > 0
            t_switch = None
            if (novelty(content(t_next), eta, E_new) > 0) != fresh:

                def switched(s: float) -> bool:
                    return (novelty(content(s), eta, decay(t0, p0, e0, s - t0)[1]) > 0) != fresh

                t_switch = _bisect(t0, t_next, switched)
            if viable and pop_new < phi:

                def below(s: float) -> bool:
                    return decay(t0, p0, e0, s - t0)[0] < phi

                t_cross = _bisect(t0, t_next, below)
                if t_switch is None or t_cross <= t_switch:
                    t_star = t_cross
                    pop, E = decay(t0, p0, e0, t_star - t0)
                    t = t_star
                    rows.append(sample(t, pop, E))
                    reason = "phi_crossing"
                    break
            if t_switch is not None:
                # the decay rate jumps when novelty changes sign; restart the grid there
                pop, E = decay(t0, p0, e0, t_switch - t0)
                t = t_switch
                rows.append(sample(t, pop, E))
                t_phase, k = t, 0
                continue

        t, pop, E = t_next, pop_new, E_new
        k += 1
        rows.append(sample(t, pop, E))
        if pop >= phi:
            viable = True

    if reason is None:
        if t_service is not None and t >= t_service:
            t_star, reason = float(t_service), "service_horizon"
        else:
            reason = "horizon_end"
    return LifecycleSimResult(
        trajectory=tuple(rows),
        t_novelty_exhaustion=t_n,
        t_star=t_star,
        terminal_reason=reason,
        never_viable=(reason == "phi_crossing" and not viable),
    )
