"""Closed-form curve families for growth and post-peak decay.

Every decay family is anchored at ``(t_peak, p_peak)`` so that fitted
baselines are directly comparable. Values are real-valued players; rounding
is left to presentation code.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Union

import numpy as np
from scipy import optimize, special

from .errors import ValidationError

LN2 = math.log(2.0)


def _positive(name: str, value: float) -> None:
    if not (value > 0 and math.isfinite(value)):
        raise ValidationError(f"{name} must be positive and finite, got {value}")


def _finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {value}")


@dataclass(frozen=True)
class LogisticParams:
    K: float
    r: float
    t0: float
    family = "logistic"

    def __post_init__(self) -> None:
        _positive("K", self.K)
        _positive("r", self.r)
        _finite("t0", self.t0)


@dataclass(frozen=True)
class BassParams:
    p: float
    q: float
    m_market: float
    family = "bass"

    def __post_init__(self) -> None:
        _positive("p", self.p)
        if not (self.q >= 0 and math.isfinite(self.q)):
            raise ValidationError(f"q must be >= 0, got {self.q}")
        _positive("m_market", self.m_market)


@dataclass(frozen=True)
class ExponentialDecayParams:
    p_peak: float
    t_peak: float
    mu: float
    family = "exponential"

    def __post_init__(self) -> None:
        _positive("p_peak", self.p_peak)
        _finite("t_peak", self.t_peak)
        _positive("mu", self.mu)


@dataclass(frozen=True)
class WeibullDecayParams:
    p_peak: float
    t_peak: float
    theta: float
    k: float
    family = "weibull"

    def __post_init__(self) -> None:
        _positive("p_peak", self.p_peak)
        _finite("t_peak", self.t_peak)
        _positive("theta", self.theta)
        _positive("k", self.k)


@dataclass(frozen=True)
class PowerLawDecayParams:
    """``p_peak * (1 + (t - t_peak)/s) ** -a``."""

    p_peak: float
    t_peak: float
    a: float
    s: float
    family = "power_law"

    def __post_init__(self) -> None:
        _positive("p_peak", self.p_peak)
        _finite("t_peak", self.t_peak)
        _positive("a", self.a)
        _positive("s", self.s)


@dataclass(frozen=True)
class LogNormalDecayParams:
    """``p_peak`` times the log-normal survival function of ``t - t_peak``."""

    p_peak: float
    t_peak: float
    m_ln: float
    s_ln: float
    family = "lognormal"

    def __post_init__(self) -> None:
        _positive("p_peak", self.p_peak)
        _finite("t_peak", self.t_peak)
        _finite("m_ln", self.m_ln)
        _positive("s_ln", self.s_ln)


DecayParams = Union[ExponentialDecayParams, WeibullDecayParams, PowerLawDecayParams, LogNormalDecayParams]
DECAY_TYPES = (ExponentialDecayParams, WeibullDecayParams, PowerLawDecayParams, LogNormalDecayParams)


@dataclass(frozen=True)
class NetworkUtilityParams:
    alpha_u: float
    beta: float
    family = "network_utility"

    def __post_init__(self) -> None:
        _positive("alpha_u", self.alpha_u)
        _positive("beta", self.beta)


@dataclass(frozen=True)
class BiphasicParams:
    """Logistic growth up to ``t_peak`` joined to a decay branch after it."""

    growth: LogisticParams
    decay: DecayParams
    t_peak: float
    family = "biphasic"

    def __post_init__(self) -> None:
        if not isinstance(self.decay, DECAY_TYPES):
            raise ValidationError(f"decay branch must be a decay family, got {type(self.decay).__name__}")
        if self.decay.t_peak != self.t_peak:
            raise ValidationError("decay.t_peak must equal the biphasic t_peak")
        at_peak = float(eval_logistic(self.growth, self.t_peak))
        if abs(at_peak - self.decay.p_peak) > 1e-9 * max(abs(at_peak), 1.0):
            raise ValidationError(
                f"branches disagree at t_peak: growth gives {at_peak!r}, decay.p_peak is {self.decay.p_peak!r}"
            )


def make_biphasic(growth: LogisticParams, t_peak: float, decay_family: str, **shape) -> BiphasicParams:
    """Build a continuous biphasic model; ``p_peak`` is taken from the growth branch."""
    cls = PARAM_TYPES[decay_family]
    if cls not in DECAY_TYPES:
        raise ValidationError(f"{decay_family!r} is not a decay family")
    p_peak = float(eval_logistic(growth, t_peak))
    return BiphasicParams(growth=growth, decay=cls(p_peak=p_peak, t_peak=t_peak, **shape), t_peak=t_peak)


PARAM_TYPES: dict[str, type] = {
    cls.family: cls
    for cls in (
        LogisticParams,
        BassParams,
        ExponentialDecayParams,
        WeibullDecayParams,
        PowerLawDecayParams,
        LogNormalDecayParams,
        NetworkUtilityParams,
        BiphasicParams,
    )
}

# Free curve parameters per family (t_peak is an anchor, not fitted).
FREE_PARAMS: dict[str, tuple[str, ...]] = {
    "logistic": ("K", "r", "t0"),
    "bass": ("p", "q", "m_market"),
    "exponential": ("p_peak", "mu"),
    "weibull": ("p_peak", "theta", "k"),
    "power_law": ("p_peak", "a", "s"),
    "lognormal": ("p_peak", "m_ln", "s_ln"),
}


# --------------------------------------------------------------------------- evaluation


def eval_logistic(params: LogisticParams, t):
    return params.K * special.expit(params.r * (np.asarray(t, dtype=float) - params.t0))


def eval_bass_cumulative(params: BassParams, t):
    """Cumulative adopters ``m * F(t)`` of the closed-form Bass solution, ``t`` since launch."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("Bass model is defined for t >= 0 only")
    decay = np.exp(-(params.p + params.q) * t)
    return params.m_market * (1.0 - decay) / (1.0 + (params.q / params.p) * decay)


def _lognormal_survival(x, m_ln: float, s_ln: float):
    out = np.ones_like(x)
    pos = x > 0
    out[pos] = 0.5 * special.erfc((np.log(x[pos]) - m_ln) / (s_ln * math.sqrt(2.0)))
    return out


def eval_decay(params: DecayParams, t):
    """Post-peak population for any decay family; equals ``p_peak`` at ``t_peak``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < params.t_peak):
        raise ValidationError(f"decay curves are defined for t >= t_peak ({params.t_peak})")
    x = np.atleast_1d(t_arr - params.t_peak)
    if isinstance(params, ExponentialDecayParams):
        shape = np.exp(-params.mu * x)
    elif isinstance(params, WeibullDecayParams):
        shape = np.exp(-((x / params.theta) ** params.k))
    elif isinstance(params, PowerLawDecayParams):
        shape = (1.0 + x / params.s) ** (-params.a)
    elif isinstance(params, LogNormalDecayParams):
        shape = _lognormal_survival(x, params.m_ln, params.s_ln)
    else:
        raise ValidationError(f"not a decay parameter set: {type(params).__name__}")
    out = params.p_peak * shape
    return out.reshape(t_arr.shape) if t_arr.ndim else float(out[0])


def eval_biphasic(params: BiphasicParams, t):
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t_arr)
    grow = t_arr <= params.t_peak
    out[grow] = eval_logistic(params.growth, t_arr[grow])
    if np.any(~grow):
        out[~grow] = eval_decay(params.decay, t_arr[~grow])
    return out if np.ndim(t) else float(out[0])


def evaluate(params, t):
    """Dispatch on the parameter family."""
    if isinstance(params, LogisticParams):
        return eval_logistic(params, t)
    if isinstance(params, BassParams):
        return eval_bass_cumulative(params, t)
    if isinstance(params, BiphasicParams):
        return eval_biphasic(params, t)
    return eval_decay(params, t)


# --------------------------------------------------------------------------- derived quantities


def half_life(params: DecayParams) -> float:
    """Time from the peak until the curve reaches half its peak value."""
    if isinstance(params, ExponentialDecayParams):
        return LN2 / params.mu
    if isinstance(params, WeibullDecayParams):
        return params.theta * LN2 ** (1.0 / params.k)
    if not isinstance(params, DECAY_TYPES):
        raise ValidationError(f"half-life needs a decay family, got {type(params).__name__}")

    target = 0.5 * params.p_peak

    def gap(x: float) -> float:
        return eval_decay(params, params.t_peak + x) - target

    hi = 1.0
    while gap(hi) > 0:
        hi *= 2.0
        if hi > 1e300:
            raise ValidationError("could not bracket the half-life")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    return optimize.brentq(gap, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=500)


def network_utility(params: NetworkUtilityParams, pop):
    pop = np.asarray(pop, dtype=float)
    if np.any(pop < 0):
        raise ValidationError("population must be >= 0")
    return params.alpha_u * pop**params.beta


def utility_loss_rate(params: NetworkUtilityParams, pop, dpop_dt):
    """Chain-rule rate of change of network utility, ``alpha_u * beta * P**(beta-1) * dP/dt``."""
    pop = np.asarray(pop, dtype=float)
    if np.any(pop < 0):
        raise ValidationError("population must be >= 0")
    if params.beta < 1 and np.any(pop == 0):
        raise ValidationError("utility loss rate is singular at zero population when beta < 1")
    return params.alpha_u * params.beta * pop ** (params.beta - 1.0) * np.asarray(dpop_dt, dtype=float)


# --------------------------------------------------------------------------- JSON


def params_to_dict(params) -> dict:
    out = {"family": params.family}
    if isinstance(params, BiphasicParams):
        out.update(
            growth=params_to_dict(params.growth),
            decay=params_to_dict(params.decay),
            t_peak=params.t_peak,
        )
        return out
    out.update(asdict(params))
    return out


def params_from_dict(data: dict):
    if not isinstance(data, dict):
        raise ValidationError("parameter set must be a JSON object")
    try:
        cls = PARAM_TYPES[data["family"]]
    except KeyError:
        raise ValidationError(
            f"unknown or missing family tag {data.get('family')!r}; known: {sorted(PARAM_TYPES)}"
        ) from None
    if cls is BiphasicParams:
        try:
            return BiphasicParams(
                growth=params_from_dict(data["growth"]),
                decay=params_from_dict(data["decay"]),
                t_peak=float(data["t_peak"]),
            )
        except KeyError as exc:
            raise ValidationError(f"biphasic parameter set missing {exc.args[0]!r}") from None
    names = [f.name for f in fields(cls)]
    extra = set(data) - set(names) - {"family"}
    missing = set(names) - set(data)
    if extra or missing:
        raise ValidationError(
            f"{cls.family} parameters: missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    try:
        return cls(**{n: float(data[n]) for n in names})
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{cls.family} parameters: {exc}") from None
