"""Critical-mass threshold estimation for a fixed matchmaking profile.

Two routes are provided. The analytic route treats queue time as the time to
gather ``match_size`` Poisson arrivals and ignores roles and skill. The
simulation route runs a greedy FIFO matcher with role quotas over simulated
arrivals, measures match fill time and within-match skill spread, and
binary-searches the smallest viable population.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy import special

from .errors import ValidationError

MINUTES_PER_HOUR = 60.0


@dataclass(frozen=True)
class OperationalProfile:
    match_size: int
    rho: float  # sessions per player per hour
    q_max: float  # minutes
    m_max: float = math.inf  # skill-spread units
    skill_spread: float = 0.0  # rating points (standard deviation)
    regions: int = 1
    role_quota: Mapping[str, int] | None = None
    role_mix: Mapping[str, float] | None = None

    def __post_init__(self) -> None:
        if int(self.match_size) != self.match_size or self.match_size < 2:
            raise ValidationError(f"match_size must be an integer >= 2, got {self.match_size}")
        object.__setattr__(self, "match_size", int(self.match_size))
        if not (self.rho > 0 and math.isfinite(self.rho)):
            raise ValidationError(f"rho must be positive, got {self.rho}")
        if not self.q_max > 0:
            raise ValidationError(f"q_max must be positive, got {self.q_max}")
        if not self.m_max > 0:
            raise ValidationError(f"m_max must be positive, got {self.m_max}")
        if not (self.skill_spread >= 0 and math.isfinite(self.skill_spread)):
            raise ValidationError(f"skill_spread must be >= 0, got {self.skill_spread}")
        if int(self.regions) != self.regions or self.regions < 1:
            raise ValidationError(f"regions must be an integer >= 1, got {self.regions}")
        object.__setattr__(self, "regions", int(self.regions))
        if self.role_quota is not None:
            quota = dict(self.role_quota)
            if not quota or any(int(v) != v or v <= 0 for v in quota.values()):
                raise ValidationError("role_quota counts must be positive integers")
            if sum(quota.values()) != self.match_size:
                raise ValidationError(
                    f"role_quota sums to {sum(quota.values())}, expected match_size {self.match_size}"
                )
            object.__setattr__(self, "role_quota", {k: int(v) for k, v in quota.items()})
        if self.role_mix is not None:
            mix = {k: float(v) for k, v in dict(self.role_mix).items()}
            if not mix or any(not v > 0 for v in mix.values()):
                raise ValidationError("role_mix probabilities must be positive")
            if abs(sum(mix.values()) - 1.0) > 1e-9:
                raise ValidationError(f"role_mix must sum to 1, got {sum(mix.values())!r}")
            object.__setattr__(self, "role_mix", mix)

    def to_dict(self) -> dict:
        return {
            "match_size": self.match_size,
            "role_quota": None if self.role_quota is None else dict(self.role_quota),
            "role_mix": None if self.role_mix is None else dict(self.role_mix),
            "rho_per_hour": self.rho,
            "q_max_minutes": None if math.isinf(self.q_max) else self.q_max,
            "m_max": None if math.isinf(self.m_max) else self.m_max,
            "skill_spread": self.skill_spread,
            "regions": self.regions,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> OperationalProfile:
        known = {"match_size", "role_quota", "role_mix", "rho_per_hour", "q_max_minutes", "m_max", "skill_spread", "regions"}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"profile: unknown field(s) {sorted(unknown)}")
        for key in ("match_size", "rho_per_hour", "q_max_minutes"):
            if key not in data:
                raise ValidationError(f"profile.{key}: required field missing")
        q_max = data["q_max_minutes"]
        m_max = data.get("m_max")
        try:
            return cls(
                match_size=data["match_size"],
                rho=float(data["rho_per_hour"]),
                q_max=math.inf if q_max is None else float(q_max),
                m_max=math.inf if m_max is None else float(m_max),
                skill_spread=float(data.get("skill_spread", 0.0)),
                regions=data.get("regions", 1),
                role_quota=data.get("role_quota"),
                role_mix=data.get("role_mix"),
            )
        except (TypeError, AttributeError) as exc:
            raise ValidationError(f"profile: {exc}") from None


@dataclass(frozen=True)
class ViabilityEstimate:
    phi: int
    mean_queue_at_phi: float  # minutes
    mean_imbalance_at_phi: float  # skill-spread units
    method: str  # analytic | discrete_event
    seed: int | None = None
    replications: int = 0
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "phi": self.phi,
            "mean_queue_at_phi": self.mean_queue_at_phi,
            "mean_imbalance_at_phi": self.mean_imbalance_at_phi,
            "method": self.method,
            "seed": self.seed,
            "replications": self.replications,
            "notes": list(self.notes),
        }


def _pool_rate_per_minute(profile: OperationalProfile, pop: float) -> float:
    return pop * profile.rho / profile.regions / MINUTES_PER_HOUR


def queue_time_analytic(profile: OperationalProfile, pop: float) -> float:
    """Expected minutes to gather one match from a region's Poisson arrival stream."""
    if not pop >= 1:
        raise ValidationError(f"population must be >= 1, got {pop}")
    return profile.match_size / _pool_rate_per_minute(profile, pop)


def expected_random_imbalance(profile: OperationalProfile) -> float:
    """Mean within-match skill SD (population SD) for matches drawn without regard to skill."""
    n = profile.match_size
    return float(
        profile.skill_spread
        * math.sqrt(2.0 / n)
        * math.exp(special.gammaln(n / 2.0) - special.gammaln((n - 1) / 2.0))
    )


def phi_analytic(profile: OperationalProfile) -> ViabilityEstimate:
    """Smallest integer population whose analytic queue time meets ``q_max``.

    Roles and skill are ignored, so this is a lower bound on the simulated threshold.
    """
    n = profile.match_size
    if math.isinf(profile.q_max):
        phi = n
    else:
        phi = max(n, math.ceil(n * MINUTES_PER_HOUR * profile.regions / (profile.rho * profile.q_max)))
        # guard against rounding in the closed form
        while phi > n and queue_time_analytic(profile, phi - 1) <= profile.q_max:
            phi -= 1
        while queue_time_analytic(profile, phi) > profile.q_max:
            phi += 1
    return ViabilityEstimate(
        phi=phi,
        mean_queue_at_phi=queue_time_analytic(profile, phi),
        mean_imbalance_at_phi=expected_random_imbalance(profile),
        method="analytic",
        notes=("role and skill constraints ignored; lower bound",),
    )


@dataclass(frozen=True)
class _Replication:
    mean_gap: float  # mean arrivals-time between match formations, unit-rate clock
    mean_imbalance: float


def _roles(profile: OperationalProfile) -> tuple[list[str], np.ndarray] | None:
    if profile.role_quota is None:
        return None
    quota = profile.role_quota
    if profile.role_mix is None:
        mix = {r: q / profile.match_size for r, q in quota.items()}
    else:
        mix = dict(profile.role_mix)
        missing = [r for r in quota if r not in mix]
        if missing:
            raise ValidationError(f"role_mix gives probability 0 to quota role(s) {missing}")
    names = sorted(mix)
    return names, np.array([mix[r] for r in names])


def _run_replication(
    profile: OperationalProfile, rng: np.random.Generator, n_matches: int, max_arrivals: int
) -> _Replication:
    """Greedy FIFO matcher on a unit-rate Poisson arrival stream."""
    roles = _roles(profile)
    quota = profile.role_quota or {}
    n = profile.match_size
    batch = 4096

    queues: dict[str, list[float]] = {}
    heads: dict[str, int] = {}
    if roles is not None:
        for r in roles[0]:
            queues[r], heads[r] = [], 0
    fifo: list[float] = []

    t = 0.0
    last_formed = 0.0
    gaps: list[float] = []
    spreads: list[float] = []
    arrivals = 0
    while len(gaps) < n_matches:
        if arrivals >= max_arrivals:
            raise ValidationError(
                f"matcher formed only {len(gaps)} of {n_matches} matches in {max_arrivals} arrivals; "
                "role mix cannot sustain the quota"
            )
        inter = rng.exponential(1.0, batch)
        skills = rng.normal(0.0, 1.0, batch) * profile.skill_spread
        picks = rng.choice(len(roles[0]), size=batch, p=roles[1]) if roles is not None else None
        for i in range(batch):
            t += inter[i]
            arrivals += 1
            if roles is None:
                fifo.append(skills[i])
                if len(fifo) < n:
                    continue
                members = fifo[:n]
                del fifo[:n]
            else:
                role = roles[0][picks[i]]
                queues[role].append(skills[i])
                if role not in quota:
                    continue
                if any(len(queues[r]) - heads[r] < q for r, q in quota.items()):
                    continue
                members = []
                for r, q in quota.items():
                    h = heads[r]
                    members.extend(queues[r][h : h + q])
                    heads[r] = h + q
            gaps.append(t - last_formed)
            last_formed = t
            spreads.append(float(np.std(members)))
            if len(gaps) == n_matches:
                break
    return _Replication(mean_gap=float(np.mean(gaps)), mean_imbalance=float(np.mean(spreads)))


def _replication_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def queue_time_sim(
    profile: OperationalProfile, pop: float, seed: int, replications: int = 1, matches_per_rep: int = 10_000
) -> tuple[float, float]:
    """Simulated (mean queue minutes, mean within-match skill SD) at a fixed population."""
    if not pop >= 1:
        raise ValidationError(f"population must be >= 1, got {pop}")
    reps = [
        _run_replication(profile, _replication_rng(seed, i), matches_per_rep, 1000 * profile.match_size * matches_per_rep)
        for i in range(replications)
    ]
    gap = float(np.mean([r.mean_gap for r in reps]))
    return gap / _pool_rate_per_minute(profile, pop), float(np.mean([r.mean_imbalance for r in reps]))


def estimate_phi_sim(
    profile: OperationalProfile,
    seed: int,
    replications: int = 50,
    pop_hi: int | None = None,
    matches_per_rep: int = 200,
) -> ViabilityEstimate:
    """Discrete-event estimate of the critical mass.

    Each replication draws one unit-rate arrival stream (inter-arrival
    times, roles, skills) from a seed derived from ``(seed, index)``. A
    Poisson stream at rate ``lam`` is the unit stream with its clock divided
    by ``lam``, and the FIFO matcher's decisions do not depend on the clock,
    so every candidate population reuses the same replications (common
    random numbers). That makes the mean queue time exactly decreasing in
    population and the binary search deterministic.

    Queue time is the mean interval between successive match formations in
    one region, the quantity the analytic estimate models. Imbalance is the
    mean within-match skill standard deviation.
    """
    if replications < 1:
        raise ValidationError("replications must be >= 1")
    if matches_per_rep < 1:
        raise ValidationError("matches_per_rep must be >= 1")
    analytic = phi_analytic(profile)
    if pop_hi is None:
        pop_hi = 20 * analytic.phi
    if pop_hi < analytic.phi:
        raise ValidationError(f"pop_hi={pop_hi} is below the analytic lower bound {analytic.phi}")

    max_arrivals = 1000 * profile.match_size * matches_per_rep
    reps = [
        _run_replication(profile, _replication_rng(seed, i), matches_per_rep, max_arrivals)
        for i in range(replications)
    ]
    unit_gap = float(np.mean([r.mean_gap for r in reps]))
    imbalance = float(np.mean([r.mean_imbalance for r in reps]))

    def queue(pop: int) -> float:
        return unit_gap / _pool_rate_per_minute(profile, pop)

    def viable(pop: int) -> bool:
        return queue(pop) <= profile.q_max and imbalance <= profile.m_max

    if not viable(pop_hi):
        binding = []
        if queue(pop_hi) > profile.q_max:
            binding.append(f"queue {queue(pop_hi):.4g} min > q_max {profile.q_max:g}")
        if imbalance > profile.m_max:
            binding.append(f"imbalance {imbalance:.4g} > m_max {profile.m_max:g}")
        raise ValidationError(f"tolerances unsatisfiable at pop_hi={pop_hi}: " + "; ".join(binding))

    lo, hi = profile.match_size, int(pop_hi)
    if viable(lo):
        hi = lo
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if viable(mid):
                hi = mid
            else:
                lo = mid
    notes = []
    if profile.role_quota is not None:
        notes.append(f"role quota applied; analytic lower bound is {analytic.phi}")
    return ViabilityEstimate(
        phi=hi,
        mean_queue_at_phi=queue(hi),
        mean_imbalance_at_phi=imbalance,
        method="discrete_event",
        seed=int(seed),
        replications=replications,
        notes=tuple(notes),
    )


PHI_REFERENCES: tuple[tuple[str, int, str], ...] = (
    (
        "3v3 competitive, region-split",
        58000,
        "3v3 with region splitting, skill brackets and mode selection; about 5 million monthly actives",
    ),
    (
        "stylized configuration",
        8000,
        "representative threshold calculation for one stylized matchmaking configuration",
    ),
)


def phi_reference_table() -> list[tuple[str, int, str]]:
    return list(PHI_REFERENCES)


def lookup_phi_reference(label: str) -> int | None:
    for name, phi, _ in PHI_REFERENCES:
        if name == label:
            return phi
    return None
