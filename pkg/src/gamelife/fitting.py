"""Maximum-likelihood fitting of growth and decay curves to population series.

Noise models
------------
``gaussian``
    ``y ~ Normal(f, (sigma * f)**2)``: dispersion proportional to the
    predicted count.
``lognormal``
    ``log y ~ Normal(log f, sigma**2)``; requires strictly positive counts.

In both cases ``sigma`` is profiled out analytically and counted as one
extra parameter in AIC/BIC. Curves are fitted by multi-start Nelder-Mead in
a log-transformed parameter space, followed by one polishing restart from
the best start.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, signal, special

from . import models
from .errors import ConvergenceError, NumericalError, ValidationError
from .models import FREE_PARAMS, LN2, PARAM_TYPES
from .reference import GENRE_HALF_LIVES, months_to_days
from .timeseries import PopulationSeries

NOISE_MODELS = ("gaussian", "lognormal")
DECAY_FAMILIES = ("exponential", "weibull", "power_law", "lognormal")
GROWTH_FAMILIES = ("logistic", "bass")
MIN_POINTS = 8
CONFIDENCE = 0.95

# parameters fitted on a log scale; everything else is fitted as-is
_LOG_SCALE = {"p_peak", "mu", "theta", "k", "a", "s", "s_ln", "K", "r", "p", "q", "m_market"}


class PeakResult(NamedTuple):
    t_peak: float
    p_peak: float
    has_decay: bool


def _smooth(values: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return values.astype(float)
    kernel = np.ones(window)
    sums = np.convolve(values, kernel, mode="same")
    counts = np.convolve(np.ones_like(values, dtype=float), kernel, mode="same")
    return sums / counts


def detect_peak(series: PopulationSeries, smoothing_window: int = 1) -> PeakResult:
    """Global maximum of the centred moving average (earliest on ties).

    ``p_peak`` is the raw observation at that time. ``has_decay`` is False
    when the maximum sits on the last observation.
    """
    if smoothing_window < 1:
        raise ValidationError("smoothing_window must be >= 1")
    if len(series) < max(2, 2 * smoothing_window):
        raise ValidationError(
            f"series of {len(series)} points is too short for smoothing window {smoothing_window}"
        )
    smoothed = _smooth(series.p, smoothing_window)
    i = int(np.argmax(smoothed))
    return PeakResult(series.times[i], series.players[i], i < len(series) - 1)


def prominent_peaks(series: PopulationSeries, prominence_frac: float = 0.1, smoothing_window: int = 1) -> list[float]:
    """Timestamps of peaks whose prominence exceeds ``prominence_frac`` of the series maximum."""
    y = _smooth(series.p, smoothing_window)
    padded = np.concatenate(([0.0], y, [0.0]))
    idx, _ = signal.find_peaks(padded, prominence=prominence_frac * float(y.max()))
    return [series.times[i - 1] for i in idx]


def detect_final_peak(series: PopulationSeries, smoothing_window: int = 1, prominence_frac: float = 0.1) -> PeakResult:
    """Last prominent peak; the anchor for fitting only the tail of a sawtooth series."""
    detect_peak(series, smoothing_window)  # length checks
    peaks = prominent_peaks(series, prominence_frac, smoothing_window)
    t = peaks[-1]
    i = series.times.index(t)
    return PeakResult(t, series.players[i], i < len(series) - 1)


# --------------------------------------------------------------------------- curves & likelihood


def _curve(family: str, values: dict, t: np.ndarray, t_anchor: float) -> np.ndarray:
    """Raw curve evaluation without parameter validation (hot path of the optimizer)."""
    if family == "logistic":
        return values["K"] * special.expit(values["r"] * (t - values["t0"]))
    if family == "bass":
        x = t - t_anchor
        e = np.exp(-(values["p"] + values["q"]) * x)
        return values["m_market"] * (1.0 - e) / (1.0 + values["q"] / values["p"] * e)
    x = t - t_anchor
    p = values["p_peak"]
    if family == "exponential":
        return p * np.exp(-values["mu"] * x)
    if family == "weibull":
        return p * np.exp(-((x / values["theta"]) ** values["k"]))
    if family == "power_law":
        return p * (1.0 + x / values["s"]) ** (-values["a"])
    if family == "lognormal":
        out = np.ones_like(x)
        pos = x > 0
        out[pos] = 0.5 * special.erfc((np.log(x[pos]) - values["m_ln"]) / (values["s_ln"] * math.sqrt(2.0)))
        return p * out
    raise ValidationError(f"unknown family {family!r}")


_SIGMA2_FLOOR = 1e-300  # keeps the log finite on exact fits


def _profile_nll(noise_model: str, y: np.ndarray, f: np.ndarray, log_y: np.ndarray | None) -> tuple[float, float]:
    """Negative log-likelihood with sigma profiled out; returns (nll, sigma_hat)."""
    n = y.size
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        return math.inf, math.nan
    if noise_model == "gaussian":
        z = (y - f) / f
        s2 = max(float(np.mean(z * z)), _SIGMA2_FLOOR)
        nll = 0.5 * n * math.log(2 * math.pi * s2) + float(np.sum(np.log(f))) + 0.5 * n
    else:
        r = log_y - np.log(f)
        s2 = max(float(np.mean(r * r)), _SIGMA2_FLOOR)
        nll = float(np.sum(log_y)) + 0.5 * n * math.log(2 * math.pi * s2) + 0.5 * n
    return nll, math.sqrt(s2)


def _to_vector(family: str, values: dict) -> np.ndarray:
    return np.array(
        [math.log(values[n]) if n in _LOG_SCALE else values[n] for n in FREE_PARAMS[family]]
    )


def _from_vector(family: str, vec: np.ndarray) -> dict:
    out = {}
    for n, v in zip(FREE_PARAMS[family], vec):
        out[n] = math.exp(min(v, 700.0)) if n in _LOG_SCALE else float(v)
    return out


@dataclass(frozen=True)
class _Problem:
    family: str
    noise_model: str
    t: np.ndarray
    y: np.ndarray
    t_anchor: float
    log_y: np.ndarray | None

    def objective(self, vec: np.ndarray) -> float:
        if not np.all(np.isfinite(vec)):
            return math.inf
        with np.errstate(all="ignore"):
            f = _curve(self.family, _from_vector(self.family, vec), self.t, self.t_anchor)
            return _profile_nll(self.noise_model, self.y, f, self.log_y)[0]

    def with_y(self, y: np.ndarray) -> _Problem:
        return replace(self, y=y, log_y=np.log(y) if self.noise_model == "lognormal" else None)


def _nelder_mead(problem: _Problem, x0: np.ndarray) -> optimize.OptimizeResult:
    """Nelder-Mead; a run that stalls on the iteration cap counts as converged if a restart stays put.

    Near-exact fits make the profiled objective so steep that the simplex
    rarely meets the function tolerance although the parameters have settled.
    """
    dim = x0.size
    opts = {"xatol": 1e-9, "fatol": 1e-10, "maxiter": 400 * dim, "maxfev": 800 * dim}
    res = optimize.minimize(problem.objective, x0, method="Nelder-Mead", options=opts)
    if res.success or not np.all(np.isfinite(res.x)):
        return res
    again = optimize.minimize(problem.objective, res.x, method="Nelder-Mead", options=opts)
    if again.fun <= res.fun:
        res_x, res_fun = again.x, again.fun
    else:
        res_x, res_fun = res.x, res.fun
    settled = np.max(np.abs(again.x - res.x)) < 1e-6
    return optimize.OptimizeResult(x=res_x, fun=res_fun, success=bool(again.success or settled))


def _multistart(problem: _Problem, starts: Sequence[np.ndarray], n_local: int = 4) -> tuple[np.ndarray, float, bool]:
    """Screen every start by its objective, then run Nelder-Mead from the ``n_local`` best."""
    scored = [(problem.objective(x0), i) for i, x0 in enumerate(starts)]
    scored = sorted((v, i) for v, i in scored if math.isfinite(v))[:n_local]
    best = None
    for _, i in scored:
        res = _nelder_mead(problem, starts[i])
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not math.isfinite(best.fun):
        raise ConvergenceError(f"{problem.family}: no start produced a finite likelihood")
    polished = _nelder_mead(problem, best.x)
    if polished.fun <= best.fun:
        best = polished
    return best.x, float(best.fun), bool(best.success)


# --------------------------------------------------------------------------- initialisation grid

# Half-lives bracketing realistic titles: the genre table's range endpoints.
_GRID_HALF_LIVES = tuple(
    sorted({months_to_days(v) for _, lo, hi, _ in GENRE_HALF_LIVES for v in (lo, hi) if v is not None})
)


def _empirical_half_life(x: np.ndarray, y: np.ndarray) -> float:
    below = np.nonzero(y <= 0.5 * y[0])[0]
    if below.size and x[below[0]] > 0:
        return float(x[below[0]])
    span = float(x[-1] - x[0])
    return span if span > 0 else 1.0


def _decay_starts(family: str, x: np.ndarray, y: np.ndarray, exp_mu: float | None) -> list[dict]:
    p0 = float(max(y[0], np.max(y[: max(3, len(y) // 20)]), 1e-9))
    tau = _empirical_half_life(x, y)
    taus = (tau,) + _GRID_HALF_LIVES
    if family == "exponential":
        return [{"p_peak": p0, "mu": LN2 / tt} for tt in taus]
    if family == "weibull":
        thetas = [tau / LN2 ** (1 / k) for k in (0.5, 1.0, 2.0)]
        if exp_mu is not None:
            thetas.append(1.0 / exp_mu)
        return [{"p_peak": p0, "theta": th, "k": k} for th in thetas for k in (0.5, 1.0, 1.5, 2.0, 3.0)]
    if family == "power_law":
        return [
            {"p_peak": p0, "a": a, "s": tt / (2 ** (1 / a) - 1)}
            for a in (0.5, 1.0, 2.0, 4.0)
            for tt in (tau, 0.5 * tau, 2 * tau)
        ]
    if family == "lognormal":
        return [
            {"p_peak": p0, "m_ln": math.log(tt), "s_ln": s}
            for s in (0.3, 0.7, 1.5, 3.0)
            for tt in (tau, 0.5 * tau, 2 * tau)
        ]
    raise ValidationError(f"{family!r} is not a decay family")


def _growth_starts(family: str, x: np.ndarray, y: np.ndarray) -> list[dict]:
    ymax = float(max(np.max(y), 1e-9))
    width = float(max(x[-1] - x[0], 1e-6))
    if family == "logistic":
        half = np.nonzero(y >= 0.5 * ymax)[0]
        t_half = float(x[half[0]]) if half.size else float(x[len(x) // 2])
        return [
            {"K": ymax * kk, "r": rr / width, "t0": t_half}
            for kk in (1.0, 1.5, 3.0)
            for rr in (2.0, 6.0, 20.0)
        ]
    if family == "bass":
        return [
            {"p": pp / width, "q": qq / width, "m_market": ymax * mm}
            for pp in (0.05, 0.5)
            for qq in (1.0, 5.0, 15.0)
            for mm in (1.0, 1.5)
        ]
    raise ValidationError(f"{family!r} is not a growth family")


# --------------------------------------------------------------------------- reports


@dataclass(frozen=True)
class FitReport:
    family: str
    params: object
    log_likelihood: float
    aic: float
    bic: float
    n_points: int
    k_params: int
    residual_sd: float
    noise_model: str
    t_anchor: float
    converged: bool = True
    bootstrap_ci: dict = field(default_factory=dict)
    derived: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    # replicate parameter dicts behind bootstrap_ci; kept for curve bands, not serialised
    replicates: tuple = field(default=(), repr=False, compare=False)

    def predict(self, t) -> np.ndarray:
        return np.asarray(_curve(self.family, _param_values(self.params), np.asarray(t, float), self.t_anchor))

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": models.params_to_dict(self.params),
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "bic": self.bic,
            "n_points": self.n_points,
            "k_params": self.k_params,
            "residual_sd": self.residual_sd,
            "noise_model": self.noise_model,
            "t_anchor": self.t_anchor,
            "converged": self.converged,
            "bootstrap_ci": {k: list(v) for k, v in self.bootstrap_ci.items()},
            "derived": dict(self.derived),
            "notes": list(self.notes),
        }


def _param_values(params) -> dict:
    return {n: getattr(params, n) for n in FREE_PARAMS[params.family]}


def _build_params(family: str, values: dict, t_anchor: float):
    cls = PARAM_TYPES[family]
    if family in DECAY_FAMILIES:
        return cls(t_peak=t_anchor, **values)
    return cls(**values)


def _select(series: PopulationSeries, family: str, t_peak: float, noise_model: str, t_launch: float | None):
    if noise_model not in NOISE_MODELS:
        raise ValidationError(f"unknown noise model {noise_model!r}; expected one of {NOISE_MODELS}")
    t, y = series.t, series.p
    if family in DECAY_FAMILIES:
        keep = t >= t_peak
        anchor = t_peak
        what = "after t_peak"
    elif family in GROWTH_FAMILIES:
        keep = t <= t_peak
        anchor = 0.0
        if family == "bass":
            anchor = t_launch if t_launch is not None else (series.t_launch if series.t_launch is not None else t[0])
            keep &= t > anchor
        what = "before t_peak"
    else:
        raise ValidationError(f"unknown family {family!r}")
    if series.t_shutdown is not None:
        keep &= t < series.t_shutdown  # zeros after shutdown are structural, not decay
    t, y = t[keep], y[keep]
    if t.size < MIN_POINTS:
        raise ValidationError(f"{family}: need at least {MIN_POINTS} points {what}, have {t.size}")
    if noise_model == "lognormal" and np.any(y <= 0):
        raise ValidationError(f"{family}: lognormal noise needs strictly positive counts {what}")
    return t, y, anchor


def _fit_arrays(
    family: str, noise_model: str, t: np.ndarray, y: np.ndarray, anchor: float, exp_mu: float | None = None
) -> tuple[dict, float, float, bool]:
    problem = _Problem(family, noise_model, t, y, anchor, np.log(y) if noise_model == "lognormal" else None)
    if family in DECAY_FAMILIES:
        starts = _decay_starts(family, t - anchor, y, exp_mu)
    else:
        starts = _growth_starts(family, t, y)
    vec, nll, ok = _multistart(problem, [_to_vector(family, s) for s in starts])
    values = _from_vector(family, vec)
    f = _curve(family, values, t, anchor)
    sigma = _profile_nll(noise_model, y, f, problem.log_y)[1]
    return values, -nll, sigma, ok


def _report(family, values, ll, sigma, ok, n, anchor, noise_model, notes=()) -> FitReport:
    k = len(FREE_PARAMS[family]) + 1
    try:
        params = _build_params(family, values, anchor)
    except ValidationError as exc:
        raise ConvergenceError(f"{family}: optimum left the parameter domain ({exc})", best=values) from None
    derived: dict = {}
    if family in DECAY_FAMILIES:
        derived["half_life"] = models.half_life(params)
    report = FitReport(
        family=family,
        params=params,
        log_likelihood=ll,
        aic=2 * k - 2 * ll,
        bic=k * math.log(n) - 2 * ll,
        n_points=n,
        k_params=k,
        residual_sd=sigma,
        noise_model=noise_model,
        t_anchor=anchor,
        converged=ok,
        derived=derived,
        notes=tuple(notes),
    )
    if not ok:
        raise ConvergenceError(f"{family}: Nelder-Mead did not converge on any restart", best=report)
    return report


def fit_decay(
    series: PopulationSeries,
    family: str,
    t_peak: float,
    noise_model: str = "gaussian",
    *,
    n_boot: int = 0,
    seed: int | None = None,
    phi: float | None = None,
) -> FitReport:
    """Fit one decay family to the observations at or after ``t_peak`` (and before any shutdown).

    With ``n_boot > 0`` the report carries 95% residual-bootstrap intervals;
    with ``phi`` it carries the projected critical-mass crossing.
    """
    if family not in DECAY_FAMILIES:
        raise ValidationError(f"{family!r} is not a decay family; expected one of {DECAY_FAMILIES}")
    t, y, anchor = _select(series, family, t_peak, noise_model, None)
    exp_mu = None
    if family == "weibull":
        try:
            exp_mu = _fit_arrays("exponential", noise_model, t, y, anchor)[0]["mu"]
        except ConvergenceError:
            pass
    values, ll, sigma, ok = _fit_arrays(family, noise_model, t, y, anchor, exp_mu)
    report = _report(family, values, ll, sigma, ok, t.size, anchor, noise_model)
    if n_boot:
        ci, reps = _bootstrap(report, t, y, n_boot, seed)
        report = replace(report, bootstrap_ci=ci, replicates=reps)
    if phi is not None:
        crossing = project_phi_crossing(report, phi)
        report = replace(
            report,
            derived={
                **report.derived,
                "projected_phi_crossing": crossing.time,
                "phi_already_below_at_peak": crossing.already_below,
            },
        )
    return report


def fit_growth(
    series: PopulationSeries,
    family: str,
    t_peak: float,
    noise_model: str = "gaussian",
    *,
    t_launch: float | None = None,
) -> FitReport:
    """Fit logistic or Bass growth to the observations at or before ``t_peak``.

    Bass time is measured from ``t_launch`` (argument, series metadata, or
    the first timestamp, in that order); observations at or before launch
    are excluded because the Bass curve is zero there.
    """
    if family not in GROWTH_FAMILIES:
        raise ValidationError(f"{family!r} is not a growth family; expected one of {GROWTH_FAMILIES}")
    t, y, anchor = _select(series, family, t_peak, noise_model, t_launch)
    values, ll, sigma, ok = _fit_arrays(family, noise_model, t, y, anchor)
    return _report(family, values, ll, sigma, ok, t.size, anchor, noise_model)


@dataclass(frozen=True)
class ModelComparison:
    reports: tuple[FitReport, ...]
    winner: str
    delta_aic: dict
    errors: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "winner": self.winner,
            "delta_aic": dict(self.delta_aic),
            "ranking": [r.family for r in sorted(self.reports, key=lambda r: (r.aic, r.k_params))],
            "aic": {r.family: r.aic for r in self.reports},
            "bic": {r.family: r.bic for r in self.reports},
            "errors": dict(self.errors),
        }


def compare_models(
    series: PopulationSeries,
    families: Sequence[str],
    t_peak: float,
    noise_model: str = "gaussian",
    *,
    fit: Callable[..., FitReport] | None = None,
) -> ModelComparison:
    """Fit every family and rank by AIC; near-ties (< 1e-9) go to the simpler model.

    A failing family is recorded under ``errors`` and does not abort the
    comparison. Raises only when every family fails.
    """
    if not families:
        raise ValidationError("families must be non-empty")
    fit = fit or (lambda s, fam: fit_decay(s, fam, t_peak, noise_model))
    reports: list[FitReport] = []
    errors: dict[str, str] = {}
    numeric = False
    for fam in families:
        try:
            reports.append(fit(series, fam))
        except (ValidationError, NumericalError) as exc:
            errors[fam] = str(exc)
            numeric |= isinstance(exc, NumericalError)
    if not reports:
        detail = "every family failed: " + "; ".join(f"{k}: {v}" for k, v in errors.items())
        raise ConvergenceError(detail) if numeric else ValidationError(detail)
    best_aic = min(r.aic for r in reports)
    tied = [r for r in reports if r.aic - best_aic < 1e-9]
    winner = min(tied, key=lambda r: r.k_params)
    delta = {r.family: (0.0 if r is winner else max(r.aic - best_aic, 0.0)) for r in reports}
    return ModelComparison(reports=tuple(reports), winner=winner.family, delta_aic=delta, errors=errors)


# --------------------------------------------------------------------------- bootstrap


def _bootstrap(report: FitReport, t: np.ndarray, y: np.ndarray, n_boot: int, seed: int | None):
    if n_boot < 100:
        raise ValidationError(f"n_boot must be >= 100, got {n_boot}")
    if seed is None:
        raise ValidationError("bootstrap requires an explicit seed")
    family, noise_model, anchor = report.family, report.noise_model, report.t_anchor
    values = _param_values(report.params)
    f = _curve(family, values, t, anchor)
    if noise_model == "gaussian":
        resid = (y - f) / f
    else:
        resid = np.log(y) - np.log(f)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, y.size, size=(n_boot, y.size))
    problem = _Problem(family, noise_model, t, y, anchor, None)
    x0 = _to_vector(family, values)
    names = FREE_PARAMS[family]
    samples: list[dict] = []
    failures = 0
    for row in draws:
        r = resid[row]
        y_star = f * (1.0 + r) if noise_model == "gaussian" else f * np.exp(r)
        prob = problem.with_y(y_star)
        res = _nelder_mead(prob, x0)
        if not (res.success and math.isfinite(res.fun)):
            failures += 1
            continue
        samples.append(_from_vector(family, res.x))
    if failures > 0.2 * n_boot:
        raise ConvergenceError(f"{failures} of {n_boot} bootstrap refits failed")
    ci = {}
    for n in names:
        vals = np.array([s[n] for s in samples])
        lo, hi = np.percentile(vals, [100 * (1 - CONFIDENCE) / 2, 100 * (1 + CONFIDENCE) / 2])
        # percentile intervals need not straddle the estimate; widen rather than report a bad interval
        ci[n] = (float(min(lo, values[n])), float(max(hi, values[n])))
    return ci, tuple(samples)


def bootstrap_ci(
    series: PopulationSeries,
    family: str,
    t_peak: float,
    noise_model: str = "gaussian",
    n_boot: int = 200,
    seed: int = 0,
) -> dict[str, tuple[float, float]]:
    """95% percentile intervals from a residual-resampling bootstrap, deterministic in ``seed``."""
    if n_boot < 100:
        raise ValidationError(f"n_boot must be >= 100, got {n_boot}")
    report = fit_decay(series, family, t_peak, noise_model)
    t, y, _ = _select(series, family, t_peak, noise_model, None)
    return _bootstrap(report, t, y, n_boot, seed)[0]


def curve_band(report: FitReport, t) -> tuple[np.ndarray, np.ndarray] | None:
    """Pointwise 95% band of the bootstrap replicate curves, or None without replicates."""
    if not report.replicates:
        return None
    t = np.asarray(t, float)
    curves = np.array([_curve(report.family, v, t, report.t_anchor) for v in report.replicates])
    lo, hi = np.percentile(curves, [2.5, 97.5], axis=0)
    return lo, hi


# --------------------------------------------------------------------------- projections


class PhiCrossing(NamedTuple):
    time: float | None
    already_below: bool


def project_phi_crossing(report: FitReport, phi: float) -> PhiCrossing:
    """When the fitted decay curve first drops to ``phi``.

    Returns ``(t_peak, True)`` if the fitted peak is already at or below
    ``phi`` and ``(None, False)`` if the curve stays above ``phi`` for 100
    half-lives.
    """
    if not phi > 0:
        raise ValidationError(f"phi must be positive, got {phi}")
    params = report.params
    if not isinstance(params, models.DECAY_TYPES):
        raise ValidationError("phi crossing is projected from decay-family fits only")
    if phi >= params.p_peak:
        return PhiCrossing(params.t_peak, True)
    horizon = params.t_peak + 100.0 * models.half_life(params)

    def gap(t: float) -> float:
        return models.eval_decay(params, t) - phi

    if gap(horizon) > 0:
        return PhiCrossing(None, False)
    root = optimize.brentq(gap, params.t_peak, horizon, xtol=1e-9, rtol=4 * np.finfo(float).eps, maxiter=1000)
    return PhiCrossing(float(root), False)


@dataclass(frozen=True)
class HoldoutResult:
    report: FitReport
    train_points: int
    test_points: int
    rmse: float
    mean_abs_pct_error: float

    def to_dict(self) -> dict:
        return {
            "train_points": self.train_points,
            "test_points": self.test_points,
            "rmse": self.rmse,
            "mean_abs_pct_error": self.mean_abs_pct_error,
            "fit": self.report.to_dict(),
        }


def holdout_evaluate(
    series: PopulationSeries,
    family: str,
    t_peak: float,
    noise_model: str = "gaussian",
    train_fraction: float = 0.7,
) -> HoldoutResult:
    """Fit on the first ``train_fraction`` of post-peak points and score the rest."""
    if not 0 < train_fraction < 1:
        raise ValidationError("train_fraction must lie strictly between 0 and 1")
    post = series.between(start=t_peak)
    n_train = int(math.floor(train_fraction * len(post)))
    if n_train < MIN_POINTS or n_train >= len(post):
        raise ValidationError(
            f"train/test split of {len(post)} post-peak points at fraction {train_fraction} leaves "
            f"{n_train} training and {len(post) - n_train} test points"
        )
    cut = post.times[n_train]
    train = post.between(end=post.times[n_train - 1])
    report = fit_decay(train, family, t_peak, noise_model)
    test = post.between(start=cut)
    pred = report.predict(test.t)
    err = test.p - pred
    obs = test.p
    nz = obs > 0
    mape = float(np.mean(np.abs(err[nz]) / obs[nz])) if np.any(nz) else math.nan
    return HoldoutResult(
        report=report,
        train_points=n_train,
        test_points=len(test),
        rmse=float(np.sqrt(np.mean(err**2))),
        mean_abs_pct_error=mape,
    )
