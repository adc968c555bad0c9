"""Concurrent-player time series: ingestion, validation, summary and resampling.

Timestamps are real-valued days since 1970-01-01 (UTC). Calendar dates are
only understood at the CSV/JSON boundary.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ValidationError

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
SECONDS_PER_DAY = 86400.0

# Activity-window heuristics for the two game kinds.
ACTIVITY_WINDOW_DAYS = {"persistent": 30.0, "session": 7.0}


def to_days(value: str | float | int) -> float:
    """Convert an ISO-8601 date/datetime string or a numeric day count to days since epoch."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        out = float(value)
    else:
        text = str(value).strip()
        try:
            out = float(text)
        except ValueError:
            if text.endswith("Z"):
                text = text[:-1] + "+00:00"
            try:
                stamp = datetime.fromisoformat(text)
            except ValueError as exc:
                raise ValidationError(f"unrecognised timestamp {value!r}") from exc
            if stamp.tzinfo is None:
                stamp = stamp.replace(tzinfo=timezone.utc)
            out = (stamp - EPOCH).total_seconds() / SECONDS_PER_DAY
    if not math.isfinite(out):
        raise ValidationError(f"timestamp must be finite, got {value!r}")
    return out


def to_date(days: float) -> str:
    """Inverse of :func:`to_days` for display, at date resolution."""
    return datetime.fromtimestamp(days * SECONDS_PER_DAY, tz=timezone.utc).date().isoformat()


@dataclass(frozen=True)
class PopulationSeries:
    """Ordered (timestamp, players) observations of one title plus lifecycle metadata."""

    times: tuple[float, ...]
    players: tuple[float, ...]
    t_launch: float | None = None
    t_shutdown: float | None = None
    activity_window_delta: float = ACTIVITY_WINDOW_DAYS["persistent"]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "players", tuple(float(p) for p in self.players))
        if len(self.times) != len(self.players):
            raise ValidationError("times and players differ in length")
        for a, b in zip(self.times, self.times[1:]):
            if not b > a:
                raise ValidationError(f"timestamps must be strictly increasing ({a} then {b})")
        for t, p in zip(self.times, self.players):
            if not (p >= 0 and math.isfinite(p)):
                raise ValidationError(f"player count at t={t} must be a finite value >= 0, got {p}")
        if self.activity_window_delta <= 0:
            raise ValidationError("activity_window_delta must be positive")
        if self.t_launch is not None and self.t_shutdown is not None:
            if not self.t_launch < self.t_shutdown:
                raise ValidationError("t_launch must precede t_shutdown")
        if self.t_shutdown is not None:
            for t, p in zip(self.times, self.players):
                if t > self.t_shutdown and p > 0:
                    raise ValidationError(
                        f"non-zero population {p:g} at t={t} after shutdown at t={self.t_shutdown}"
                    )

    def __len__(self) -> int:
        return len(self.times)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.players, dtype=float)

    def between(self, start: float | None = None, end: float | None = None) -> PopulationSeries:
        """Sub-series with start <= t <= end (either bound optional)."""
        keep = [
            (t, p)
            for t, p in zip(self.times, self.players)
            if (start is None or t >= start) and (end is None or t <= end)
        ]
        return replace(self, times=tuple(t for t, _ in keep), players=tuple(p for _, p in keep))

    def metadata(self) -> dict:
        return {
            "t_launch": self.t_launch,
            "t_shutdown": self.t_shutdown,
            "label": self.label,
            "activity_window_days": self.activity_window_delta,
        }


@dataclass(frozen=True)
class SeriesStats:
    p_peak: float
    t_peak: float
    total_span: float
    zero_runs: tuple[tuple[float, float], ...]
    # median spacing between observations; the toolkit records whatever resolution it is given
    resolution: float | None = None


@dataclass(frozen=True)
class ParseOptions:
    t_launch: float | str | None = None
    t_shutdown: float | str | None = None
    label: str = ""
    kind: str = "persistent"
    activity_window_days: float | None = None

    def window(self) -> float:
        if self.activity_window_days is not None:
            return float(self.activity_window_days)
        try:
            return ACTIVITY_WINDOW_DAYS[self.kind]
        except KeyError:
            raise ValidationError(
                f"unknown game kind {self.kind!r}; expected one of {sorted(ACTIVITY_WINDOW_DAYS)}"
            ) from None


def _parse_count(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite count")
    return value


def parse_series(csv_text: str, options: ParseOptions | None = None) -> PopulationSeries:
    """Parse ``date,players`` CSV text into a validated, time-sorted series.

    Dates may be ISO-8601 or fractional days. Rows are re-sorted ascending;
    duplicates, negative counts and malformed rows are rejected with the
    offending line number.
    """
    options = options or ParseOptions()
    reader = csv.reader(io.StringIO(csv_text.lstrip("﻿")))
    rows: list[tuple[float, float, int]] = []
    header_seen = False
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if not header_seen:
            cells = [c.strip().lower() for c in row]
            if cells != ["date", "players"]:
                raise ValidationError(f"line {lineno}: expected header 'date,players', got {row!r}")
            header_seen = True
            continue
        if len(row) != 2:
            raise ValidationError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            t = to_days(row[0])
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        try:
            p = _parse_count(row[1].strip())
        except ValueError:
            raise ValidationError(f"line {lineno}: malformed player count {row[1]!r}") from None
        if p < 0:
            raise ValidationError(f"line {lineno}: negative player count {p:g}")
        rows.append((t, p, lineno))
    if not header_seen or not rows:
        raise ValidationError("empty input: no data rows")

    rows.sort(key=lambda r: r[0])
    for (t0, _, l0), (t1, _, l1) in zip(rows, rows[1:]):
        if t0 == t1:
            raise ValidationError(f"line {l1}: duplicate timestamp (also on line {l0})")

    return PopulationSeries(
        times=tuple(r[0] for r in rows),
        players=tuple(r[1] for r in rows),
        t_launch=None if options.t_launch is None else to_days(options.t_launch),
        t_shutdown=None if options.t_shutdown is None else to_days(options.t_shutdown),
        activity_window_delta=options.window(),
        label=options.label,
    )


def _fmt_count(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))


def serialize_series(series: PopulationSeries) -> str:
    """CSV text that :func:`parse_series` reads back to an identical series."""
    lines = ["date,players"]
    lines += [f"{t!r},{_fmt_count(p)}" for t, p in zip(series.times, series.players)]
    return "\n".join(lines) + "\n"


def options_from_metadata(meta: dict) -> ParseOptions:
    """Build parse options from a sidecar metadata mapping."""
    allowed = {"t_launch", "t_shutdown", "label", "activity_window_days", "kind"}
    unknown = set(meta) - allowed
    if unknown:
        raise ValidationError(f"unknown metadata field(s): {sorted(unknown)}")
    return ParseOptions(
        t_launch=meta.get("t_launch"),
        t_shutdown=meta.get("t_shutdown"),
        label=str(meta.get("label", "")),
        kind=meta.get("kind", "persistent"),
        activity_window_days=meta.get("activity_window_days"),
    )


def sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".meta.json")


def load_series(path: str | Path, meta_path: str | Path | None = None) -> PopulationSeries:
    """Read a series CSV; metadata comes from ``meta_path`` or ``<stem>.meta.json`` if present."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read series file {path}: {exc.strerror or exc}") from None
    meta_file = Path(meta_path) if meta_path is not None else sidecar_path(path)
    options = ParseOptions(label=path.stem)
    if meta_path is not None or meta_file.exists():
        try:
            meta = json.loads(meta_file.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ValidationError(f"cannot read metadata file {meta_file}: {exc.strerror or exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{meta_file}: invalid JSON ({exc.msg})") from None
        if not isinstance(meta, dict):
            raise ValidationError(f"{meta_file}: metadata must be a JSON object")
        meta.setdefault("label", path.stem)
        options = options_from_metadata(meta)
    return parse_series(text, options)


def compute_stats(series: PopulationSeries) -> SeriesStats:
    if len(series) == 0:
        raise ValidationError("cannot summarise an empty series")
    t, p = series.t, series.p
    i_peak = int(np.argmax(p))  # argmax returns the first maximum
    runs: list[tuple[float, float]] = []
    start = None
    for ti, pi in zip(series.times, series.players):
        if pi == 0:
            if start is None:
                start = ti
            last = ti
        elif start is not None:
            runs.append((start, last))
            start = None
    if start is not None:
        runs.append((start, last))
    resolution = float(np.median(np.diff(t))) if len(t) > 1 else None
    return SeriesStats(
        p_peak=float(p[i_peak]),
        t_peak=float(t[i_peak]),
        total_span=float(t[-1] - t[0]),
        zero_runs=tuple(runs),
        resolution=resolution,
    )


def interpolate(series: PopulationSeries, at: Sequence[float] | np.ndarray) -> np.ndarray:
    """Linear interpolation of the series at arbitrary times inside its span (no rounding)."""
    at = np.asarray(at, dtype=float)
    t = series.t
    if at.size and (at.min() < t[0] or at.max() > t[-1]):
        raise ValidationError("interpolation outside the observed span")
    return np.interp(at, t, series.p)


def resample(series: PopulationSeries, step: float) -> PopulationSeries:
    """Uniform grid from the first timestamp in increments of ``step``, never past the last.

    Values are linearly interpolated and rounded half-up to whole players.
    """
    if not step > 0:
        raise ValidationError(f"resample step must be positive, got {step}")
    if len(series) < 2:
        raise ValidationError("resampling needs at least two points")
    t0, t1 = series.times[0], series.times[-1]
    n = int(math.floor((t1 - t0) / step * (1 + 1e-12))) + 1
    grid = t0 + step * np.arange(n)
    grid[-1] = min(grid[-1], t1)
    values = np.floor(interpolate(series, grid) + 0.5)
    if series.t_shutdown is not None:
        values[grid > series.t_shutdown] = 0.0
    return replace(series, times=tuple(grid.tolist()), players=tuple(values.tolist()))
