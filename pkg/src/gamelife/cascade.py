"""Sub-critical departure cascade.

Below the critical mass ``phi`` each remaining player leaves at the per-capita
hazard ``alpha_d * (phi / P) ** gamma``. With ``gamma > 1`` the resulting
population ODE ``dP/dt = -alpha_d * phi**gamma * P**(1 - gamma)`` reaches
zero in finite time, which is available in closed form and is cross-checked
here by a fixed-step RK4 integrator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import StepTooLargeError, ValidationError


@dataclass(frozen=True)
class CascadeParams:
    alpha_d: float
    gamma: float
    phi: float

    def __post_init__(self) -> None:
        if not (self.alpha_d > 0 and math.isfinite(self.alpha_d)):
            raise ValidationError(f"alpha_d must be positive, got {self.alpha_d}")
        if not (self.gamma > 1 and math.isfinite(self.gamma)):
            raise ValidationError(f"gamma must exceed 1 for finite-time collapse, got {self.gamma}")
        if not (self.phi > 0 and math.isfinite(self.phi)):
            raise ValidationError(f"phi must be positive, got {self.phi}")

    def to_dict(self) -> dict:
        return {"alpha_d": self.alpha_d, "gamma": self.gamma, "phi": self.phi}


@dataclass(frozen=True)
class CascadeTrajectory:
    points: tuple[tuple[float, float], ...]
    t_collapse: float
    method: str  # "closed_form" or "rk4"

    def to_csv(self) -> str:
        rows = ["t,pop"] + [f"{t!r},{p!r}" for t, p in self.points]
        return "\n".join(rows) + "\n"


def _check_subcritical(params: CascadeParams, pop: float) -> None:
    if not pop > 0:
        raise ValidationError(f"population must be positive, got {pop}")
    if not pop < params.phi:
        raise ValidationError(
            f"the cascade applies only below the critical mass (pop={pop} >= phi={params.phi})"
        )


def departure_hazard(params: CascadeParams, pop: float) -> float:
    """Per-capita departure rate (1/day) at a sub-critical population."""
    _check_subcritical(params, pop)
    return params.alpha_d * (params.phi / pop) ** params.gamma


def _remaining_time(params: CascadeParams, pop: float) -> float:
    return pop**params.gamma / (params.gamma * params.alpha_d * params.phi**params.gamma)


def collapse_time_closed_form(params: CascadeParams, t0: float, pop0: float) -> float:
    _check_subcritical(params, pop0)
    return t0 + _remaining_time(params, pop0)


def cascade_trajectory_closed_form(
    params: CascadeParams, t0: float, pop0: float, n_points: int = 200
) -> CascadeTrajectory:
    """Exact trajectory ``P(t) = (P0**g - g*alpha_d*phi**g*(t - t0)) ** (1/g)`` sampled uniformly."""
    tc = collapse_time_closed_form(params, t0, pop0)
    g = params.gamma
    rate = g * params.alpha_d * params.phi**g
    pts = []
    for i in range(n_points + 1):
        t = t0 + (tc - t0) * i / n_points
        pts.append((t, max(pop0**g - rate * (t - t0), 0.0) ** (1.0 / g)))
    pts[-1] = (tc, 0.0)
    return CascadeTrajectory(points=tuple(pts), t_collapse=tc, method="closed_form")


def _rk4_step(params: CascadeParams, pop: float, h: float) -> float | None:
    """One RK4 step; None when a stage leaves the positive half-line."""
    c = params.alpha_d * params.phi**params.gamma
    e = 1.0 - params.gamma

    def f(p: float) -> float:
        return -c * p**e

    k1 = f(pop)
    p2 = pop + 0.5 * h * k1
    if p2 <= 0:
        return None
    k2 = f(p2)
    p3 = pop + 0.5 * h * k2
    if p3 <= 0:
        return None
    k3 = f(p3)
    p4 = pop + h * k3
    if p4 <= 0:
        return None
    k4 = f(p4)
    out = pop + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return out if out > 0 else None


def integrate_cascade(
    params: CascadeParams,
    t0: float,
    pop0: float,
    step: float,
    floor: float = 1.0,
    max_rel_change: float = 0.01,
) -> CascadeTrajectory:
    """Fixed-step RK4 integration of the cascade down to ``floor``.

    The vector field is singular at zero, so integration stops once the
    population reaches ``floor``, once one step would change the population
    by more than ``max_rel_change`` of itself (the fixed step no longer
    resolves the approach to zero), or when the next step would leave the
    positive half-line. The collapse time is then extrapolated with the closed form
    restarted at the last integrated state, and a terminal ``(t_collapse, 0)``
    point closes the trajectory.

    Raises
    ------
    StepTooLargeError
        If the very first step already overshoots zero.
    """
    _check_subcritical(params, pop0)
    if not step > 0:
        raise ValidationError(f"step must be positive, got {step}")
    if not floor > 0:
        raise ValidationError(f"floor must be positive, got {floor}")
    if not max_rel_change > 0:
        raise ValidationError(f"max_rel_change must be positive, got {max_rel_change}")
    c = params.alpha_d * params.phi**params.gamma

    points = [(t0, pop0)]
    t, pop = t0, pop0
    n = 0
    while pop > floor:
        if n > 0 and step * c * pop ** (-params.gamma) > max_rel_change:
            break
        nxt = _rk4_step(params, pop, step)
        if nxt is None:
            if n == 0:
                raise StepTooLargeError(
                    f"step {step} overshoots zero from pop={pop0}; shrink the step"
                )
            break
        n += 1
        t, pop = t0 + n * step, nxt
        points.append((t, pop))
    t_collapse = t + _remaining_time(params, pop)
    points.append((t_collapse, 0.0))
    return CascadeTrajectory(points=tuple(points), t_collapse=t_collapse, method="rk4")
