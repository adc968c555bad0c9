"""Synthetic series generators: curve-plus-noise draws and title-shaped fixtures.

The title-shaped fixtures use the peak counts and half-lives of the packaged
reference table; their exact shapes between those anchors are invented.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import models
from .reference import EVOLVE_RELAUNCH_PEAK, title
from .timeseries import PopulationSeries, serialize_series, to_days


def noisy_curve(
    params,
    times,
    noise_sd: float,
    seed: int | None,
    *,
    label: str = "",
    round_counts: bool = False,
) -> PopulationSeries:
    """Evaluate ``params`` on ``times`` with proportional gaussian noise, clipped at zero."""
    t = np.asarray(times, dtype=float)
    clean = np.asarray(models.evaluate(params, t), dtype=float)
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        clean = clean * (1.0 + noise_sd * rng.standard_normal(t.size))
    values = np.maximum(clean, 0.0)
    if round_counts:
        values = np.floor(values + 0.5)
    return PopulationSeries(times=tuple(t), players=tuple(values), label=label)


def _finish(t: np.ndarray, p: np.ndarray, noise_sd: float, seed: int | None) -> np.ndarray:
    if noise_sd > 0:
        rng = np.random.default_rng(seed)
        p = p * (1.0 + noise_sd * rng.standard_normal(p.size))
    return np.floor(np.maximum(p, 0.0) + 0.5)


def lawbreakers_like(noise_sd: float = 0.03, seed: int | None = 7) -> PopulationSeries:
    """Short ramp to the recorded peak, exponential decay, zeros after shutdown."""
    rec = title("LawBreakers")
    launch, shutdown = to_days("2017-08-08"), to_days("2018-09-14")
    t = launch + np.arange(0, 510, dtype=float)
    x = t - launch
    mu = rec.decay_rate_per_day
    peak_day = 3.0
    p = np.where(
        x < peak_day,
        rec.peak_concurrent * (0.6 + 0.4 * x / peak_day),
        rec.peak_concurrent * np.exp(-mu * (x - peak_day)),
    )
    p = _finish(t, p, noise_sd, seed)
    p[t > shutdown] = 0.0
    return PopulationSeries(tuple(t), tuple(p), t_launch=launch, t_shutdown=shutdown, label="lawbreakers_like")


def new_world_like(noise_sd: float = 0.0, seed: int | None = None) -> PopulationSeries:
    """Exponential decay from the recorded peak with shrinking update bumps every 180 days."""
    rec = title("New World")
    launch = to_days("2021-09-28")
    t = launch + np.arange(0, 1100, dtype=float)
    x = t - launch
    base = rec.peak_concurrent * np.exp(-rec.decay_rate_per_day * x)
    phase = np.mod(x, 180.0)
    cycle = np.floor(x / 180.0)
    bump = np.where(cycle >= 1, 0.35 * 0.6 ** (cycle - 1) * np.exp(-phase / 30.0), 0.0)
    p = _finish(t, base * (1.0 + bump), noise_sd, seed)
    return PopulationSeries(tuple(t), tuple(p), t_launch=launch, label="new_world_like")


def evolve_like(noise_sd: float = 0.0, seed: int | None = None) -> PopulationSeries:
    """Decay from the recorded peak, a relaunch spike to the recorded new peak, then a second decay."""
    rec = title("Evolve")
    launch = to_days("2015-02-10")
    relaunch = to_days("2017-07-11") - launch
    t = launch + np.arange(0, 1300, dtype=float)
    x = t - launch
    first = rec.peak_concurrent * np.exp(-rec.decay_rate_per_day * x)
    ramp_days = 4.0
    after = x - relaunch
    second = np.where(
        after < ramp_days,
        EVOLVE_RELAUNCH_PEAK * (after + 1.0) / (ramp_days + 1.0),
        EVOLVE_RELAUNCH_PEAK * np.exp(-math.log(2.0) / 60.0 * (after - ramp_days)),
    )
    p = np.where(after < 0, first, np.maximum(second, first))
    p = _finish(t, p, noise_sd, seed)
    return PopulationSeries(tuple(t), tuple(p), t_launch=launch, label="evolve_like")


FIXTURES = {
    "lawbreakers_like": lawbreakers_like,
    "new_world_like": new_world_like,
    "evolve_like": evolve_like,
}


def write_fixture(series: PopulationSeries, directory: str | Path, name: str | None = None) -> Path:
    """Write ``<name>.csv`` and its ``<name>.meta.json`` sidecar; returns the CSV path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    name = name or series.label
    csv_path = directory / f"{name}.csv"
    csv_path.write_text(serialize_series(series), encoding="utf-8")
    meta = {"label": name}
    if series.t_launch is not None:
        meta["t_launch"] = series.t_launch
    if series.t_shutdown is not None:
        meta["t_shutdown"] = series.t_shutdown
    (directory / f"{name}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return csv_path
