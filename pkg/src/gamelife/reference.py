"""Packaged reference data: observed title lifecycles and genre half-life ranges.

Durations are stored in months as published and converted to days at a
fixed 30 days per month.
"""

from __future__ import annotations

import math
from typing import NamedTuple

DAYS_PER_MONTH = 30.0


def months_to_days(months: float) -> float:
    return months * DAYS_PER_MONTH


def days_to_months(days: float) -> float:
    return days / DAYS_PER_MONTH


class TitleRecord(NamedTuple):
    title: str
    peak_concurrent: float | None  # None where the peak is reported as subscriptions
    peak_note: str
    half_life_months: float
    decay_pattern: str
    final_state: str

    @property
    def half_life_days(self) -> float:
        return months_to_days(self.half_life_months)

    @property
    def decay_rate_per_day(self) -> float:
        """Exponential rate whose half-life equals the recorded one."""
        return math.log(2.0) / self.half_life_days


OBSERVED_TITLES: tuple[TitleRecord, ...] = (
    TitleRecord("LawBreakers", 7571, "7,571", 2.1, "Exp.", "Omega3"),
    TitleRecord("H1Z1", 151331, "151,331", 3.4, "Exp.", "Omega1"),
    TitleRecord("Evolve", 27403, "27,403", 4.8, "Biphasic", "Omega1"),
    TitleRecord("New World", 913027, "913,027", 8.2, "Sawtooth", "Omega1"),
    TitleRecord("World of Warcraft", None, "12M sub.", 42.0, "Sawtooth", "Active"),
)

# (genre, low months, high months or None for open-ended, dominant decay driver)
GENRE_HALF_LIVES: tuple[tuple[str, float, float | None, str], ...] = (
    ("Annual FPS franchise", 12, 18, "Franchise cannibalization"),
    ("Hero shooter", 6, 24, "Competitor displacement"),
    ("Battle Royale", 18, 30, "Meta-fatigue"),
    ("MMORPG (subscription)", 36, 84, "Content exhaustion"),
    ("MMORPG (free-to-play)", 24, 60, "Monetization fatigue"),
    ("Survival sandbox", 24, 48, "Community fragmentation"),
    ("Competitive MOBA", 48, 96, "Skill-barrier ossification"),
    ("Modding-enabled sandbox", 120, None, "Mod-ecosystem decay"),
)

# Relaunch peak and late-life concurrency quoted alongside the table.
EVOLVE_RELAUNCH_PEAK = 50953
NEW_WORLD_LATE_CONCURRENT = 916
COMA_THRESHOLD_DAYS = 90.0


def title(name: str) -> TitleRecord | None:
    for rec in OBSERVED_TITLES:
        if rec.title.lower() == name.lower():
            return rec
    return None


def genre_row(genre: str) -> tuple[str, float, float | None, str] | None:
    for row in GENRE_HALF_LIVES:
        if row[0].lower() == genre.lower():
            return row
    return None


def genre_table() -> list[dict]:
    return [
        {
            "genre": g,
            "half_life_months_low": lo,
            "half_life_months_high": hi,
            "range": f"{lo:g}-{hi:g}" if hi is not None else f"{lo:g}+",
            "decay_driver": driver,
        }
        for g, lo, hi, driver in GENRE_HALF_LIVES
    ]


def titles_table() -> list[dict]:
    return [
        {
            "title": r.title,
            "peak_concurrent": r.peak_concurrent,
            "peak_note": r.peak_note,
            "half_life_months": r.half_life_months,
            "decay_pattern": r.decay_pattern,
            "final_state": r.final_state,
        }
        for r in OBSERVED_TITLES
    ]
