"""Command-line entry point: ``gamelife <command> [options]``.

Output files are the interface. Standard output carries one summary line and
the written paths; errors go to standard error. Exit codes: 0 success,
2 input or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__, cascade, fitting, lifecycle, matchmaking, novelty, reference
from .errors import NumericalError, ValidationError
from .models import LogisticParams
from .timeseries import load_series, to_days

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


# --------------------------------------------------------------------------- output helpers


def _clean(obj: Any) -> Any:
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


class _Writer:
    def __init__(self, out: Path) -> None:
        self.out = out
        self.paths: list[Path] = []
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ValidationError(f"cannot create output directory {out}: {exc.strerror or exc}") from None

    def _write(self, name: str, text: str) -> None:
        path = self.out / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot write {path}: {exc.strerror or exc}") from None
        self.paths.append(path)

    def json(self, name: str, data: Any) -> None:
        self._write(name, json.dumps(_clean(data), indent=2, sort_keys=True, allow_nan=False) + "\n")

    def text(self, name: str, text: str) -> None:
        self._write(name, text)

    def table(self, name: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, float) else v) for v in row])
        self._write(name, buf.getvalue())


def _read_json(path: str) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{p}: invalid JSON at line {exc.lineno} ({exc.msg})") from None


def _field(data: Any, path: str, kind: type | tuple = (int, float), required: bool = True, default=None):
    """Fetch ``a.b.c`` from nested dicts, naming the full path on failure."""
    cur = data
    parts = path.split(".")
    for i, key in enumerate(parts):
        if not isinstance(cur, dict):
            raise ValidationError(f"{'.'.join(parts[:i]) or 'scenario'}: expected an object")
        if key not in cur or cur[key] is None:
            if required:
                raise ValidationError(f"{path}: required field missing")
            return default
        cur = cur[key]
    if kind is not None and (not isinstance(cur, kind) or isinstance(cur, bool)):
        raise ValidationError(f"{path}: expected {getattr(kind, '__name__', 'number')}, got {type(cur).__name__}")
    return cur


def _split(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


# --------------------------------------------------------------------------- commands


def cmd_fit(args: argparse.Namespace, w: _Writer) -> str:
    series = load_series(args.series, args.meta)
    families = _split(args.families)
    growth = _split(args.growth) if args.growth else []
    if args.n_boot and args.seed is None:
        raise ValidationError("--n-boot needs --seed")

    if args.t_peak is not None:
        t_peak = to_days(args.t_peak)
        peak = fitting.PeakResult(t_peak, float(np.interp(t_peak, series.t, series.p)), t_peak < series.times[-1])
    elif args.peak == "final":
        peak = fitting.detect_final_peak(series, args.smoothing)
    else:
        peak = fitting.detect_peak(series, args.smoothing)
    notes: list[str] = []
    if not peak.has_decay:
        notes.append("no decay phase: the peak is the last observation")
    peaks = fitting.prominent_peaks(series, smoothing_window=args.smoothing)
    if len(peaks) > 1:
        if args.peak == "final":
            notes.append(f"sawtooth: {len(peaks)} prominent peaks; only the tail after the final peak is fitted")
        else:
            notes.append(
                f"sawtooth: {len(peaks)} prominent peaks; a single decay curve from the global peak "
                "ignores later cycles (use --peak final to fit the post-final-peak tail)"
            )

    def fit_one(s, fam):
        return fitting.fit_decay(
            s, fam, peak.t_peak, args.noise, n_boot=args.n_boot, seed=args.seed, phi=args.phi
        )

    comparison = fitting.compare_models(series, families, peak.t_peak, args.noise, fit=fit_one)
    post = series.between(start=peak.t_peak)
    for rep in comparison.reports:
        rep = replace(rep, notes=rep.notes + tuple(notes))
        w.json(f"fit_{rep.family}.json", rep.to_dict())
        fitted = rep.predict(post.t)
        band = fitting.curve_band(rep, post.t)
        lo, hi = band if band is not None else (fitted, fitted)
        w.table(
            f"fitcurve_{rep.family}.csv",
            ["t", "observed", "fitted", "lo_band", "hi_band"],
            [(float(a), float(b), float(c), float(d), float(e)) for a, b, c, d, e in zip(post.t, post.p, fitted, lo, hi)],
        )
    growth_fits = {}
    for fam in growth:
        try:
            rep = fitting.fit_growth(series, fam, peak.t_peak, args.noise)
        except (ValidationError, NumericalError) as exc:
            growth_fits[fam] = {"error": str(exc)}
            continue
        w.json(f"fit_{fam}.json", rep.to_dict())
        growth_fits[fam] = {"aic": rep.aic}
    summary = comparison.to_dict()
    summary.update(t_peak=peak.t_peak, p_peak=peak.p_peak, noise_model=args.noise, notes=notes)
    if growth:
        summary["growth"] = growth_fits
    w.json("comparison.json", summary)
    if args.format == "csv":
        w.table(
            "comparison.csv",
            ["family", "aic", "bic", "delta_aic"],
            [(r.family, r.aic, r.bic, comparison.delta_aic[r.family]) for r in comparison.reports],
        )
    return f"winner {comparison.winner} ({len(comparison.reports)} fitted, {len(comparison.errors)} failed)"


def _scenario(data: Any):
    if not isinstance(data, dict):
        raise ValidationError("scenario: expected a JSON object")
    growth = LogisticParams(
        K=_field(data, "growth.K"), r=_field(data, "growth.r"), t0=_field(data, "growth.t0")
    )
    segments = _field(data, "schedule.segments", list)
    for i, seg in enumerate(segments):
        if not (isinstance(seg, list) and len(seg) == 2 and all(isinstance(v, (int, float)) for v in seg)):
            raise ValidationError(f"schedule.segments[{i}]: expected [t_start, rate]")
    schedule = novelty.ContentSchedule(segments=tuple(tuple(s) for s in segments), cap=_field(data, "schedule.cap"))
    nparams = novelty.NoveltyParams(
        eta=_field(data, "novelty.eta"),
        h_bar=_field(data, "novelty.h_bar"),
        mu0=_field(data, "novelty.mu0"),
        kappa=_field(data, "novelty.kappa"),
    )
    phi = _field(data, "phi")
    casc = None
    if data.get("cascade") is not None:
        casc = cascade.CascadeParams(
            alpha_d=_field(data, "cascade.alpha_d"), gamma=_field(data, "cascade.gamma"), phi=phi
        )
    return growth, schedule, nparams, phi, casc


def cmd_simulate(args: argparse.Namespace, w: _Writer) -> str:
    data = _read_json(args.scenario)
    growth, schedule, nparams, phi, casc = _scenario(data)
    t_service = _field(data, "t_service", required=False)
    step = args.step if args.step is not None else _field(data, "step", required=False, default=0.1)
    horizon = args.horizon if args.horizon is not None else _field(data, "horizon", required=False, default=3650.0)
    result = novelty.simulate_lifecycle(growth, schedule, nparams, phi, t_service=t_service, step=step, horizon=horizon)
    w.text("simulation.csv", result.to_csv())
    summary = result.summary()
    summary["phi"] = phi
    if casc is not None and result.terminal_reason == "phi_crossing" and not result.never_viable:
        pop_star = result.trajectory[-1][1]
        pop0 = min(pop_star, phi * (1 - 1e-9))
        cstep = _field(data, "cascade.step", required=False, default=min(step, 0.01))
        traj = cascade.integrate_cascade(casc, result.t_star, pop0, cstep)
        w.text("cascade.csv", traj.to_csv())
        summary["cascade"] = {
            "t_collapse": traj.t_collapse,
            "t_collapse_closed_form": cascade.collapse_time_closed_form(casc, result.t_star, pop0),
            "pop_at_t_star": pop0,
            **casc.to_dict(),
        }
    w.json("summary.json", summary)
    t_star = "none" if result.t_star is None else f"{result.t_star:.6g}"
    return f"terminal_reason {result.terminal_reason}, t_star {t_star}"


def cmd_phi(args: argparse.Namespace, w: _Writer) -> str:
    profile = matchmaking.OperationalProfile.from_dict(_read_json(args.profile) or {})
    out: dict[str, Any] = {"profile": profile.to_dict()}
    analytic = matchmaking.phi_analytic(profile)
    out["analytic"] = analytic.to_dict()
    line = f"analytic phi {analytic.phi}"
    if args.method in ("sim", "both"):
        if args.seed is None:
            raise ValidationError("--method sim needs --seed")
        sim = matchmaking.estimate_phi_sim(
            profile, args.seed, replications=args.replications, pop_hi=args.pop_hi, matches_per_rep=args.matches
        )
        out["sim"] = sim.to_dict()
        rel = (sim.phi - analytic.phi) / analytic.phi
        out["relative_difference"] = rel
        notes = []
        if profile.role_quota is not None and sim.phi > analytic.phi:
            notes.append("role quotas raise the simulated threshold above the role-blind analytic value")
        out["notes"] = notes
        line = f"analytic phi {analytic.phi}, simulated phi {sim.phi} ({rel:+.2%})"
    if args.method == "sim":
        out.pop("analytic")
        line = f"simulated phi {out['sim']['phi']}"
    w.json("phi.json", out)
    if args.format == "csv":
        rows = [(k, out[k]["phi"], out[k]["mean_queue_at_phi"], out[k]["mean_imbalance_at_phi"]) for k in ("analytic", "sim") if k in out]
        w.table("phi.csv", ["method", "phi", "mean_queue_at_phi", "mean_imbalance_at_phi"], rows)
    return line


def cmd_classify(args: argparse.Namespace, w: _Writer) -> str:
    series = load_series(args.series, args.meta)
    if args.no_meta:
        series = replace(series, t_launch=None, t_shutdown=None)
    if args.config:
        config = lifecycle.LifecycleConfig.from_dict(_read_json(args.config))
    elif args.phi is not None:
        config = lifecycle.LifecycleConfig(phi=args.phi, delta_coma=args.delta_coma)
    else:
        raise ValidationError("classify needs --config or --phi")
    if args.as_of is not None:
        state = lifecycle.classify(series, config, to_days(args.as_of))
        w.json("classification.json", {"query": state.to_dict()})
        return f"state {state.state} at {state.as_of:g}"
    intervals = lifecycle.classify_trajectory(series, config)
    flags = lifecycle.backward_transitions(intervals)
    w.json(
        "classification.json",
        {
            "intervals": [iv.to_dict() for iv in intervals],
            "final_state": intervals[-1].state,
            "backward_transitions": flags,
            "config": {"phi": config.phi, "delta_coma": config.delta_coma, "t_service": config.t_service},
        },
    )
    if args.format == "csv":
        w.table(
            "classification.csv",
            ["start", "end", "state", "backward_transition"],
            [(iv.start, iv.end, iv.state, int(iv.backward_transition)) for iv in intervals],
        )
    if args.nu is not None:
        mem = lifecycle.memory_trajectory(series, lifecycle.MemoryModel(nu=args.nu))
        psi = lifecycle.nostalgia_inversion((series.t, series.p), mem)
        t_off = series.t_shutdown if series.t_shutdown is not None else config.t_service
        window = lifecycle.preservation_window(psi, t_off)
        w.json("preservation.json", {**window.to_dict(), "nu": args.nu})
    return f"final state {intervals[-1].state}, {flags} backward transition(s)"


def cmd_presets(args: argparse.Namespace, w: _Writer) -> str:
    phi_rows = [{"label": l, "phi": p, "note": n} for l, p, n in matchmaking.phi_reference_table()]
    w.json(
        "presets.json",
        {
            "genre_half_lives": reference.genre_table(),
            "phi_references": phi_rows,
            "observed_titles": reference.titles_table(),
            "days_per_month": reference.DAYS_PER_MONTH,
        },
    )
    if args.format == "csv":
        w.table(
            "presets_genres.csv",
            ["genre", "half_life_months_low", "half_life_months_high", "decay_driver"],
            [(r["genre"], r["half_life_months_low"], r["half_life_months_high"], r["decay_driver"]) for r in reference.genre_table()],
        )
        w.table("presets_phi.csv", ["label", "phi"], [(r["label"], r["phi"]) for r in phi_rows])
    return f"{len(reference.GENRE_HALF_LIVES)} genres, {len(phi_rows)} phi references"


def cmd_holdout(args: argparse.Namespace, w: _Writer) -> str:
    series = load_series(args.series, args.meta)
    t_peak = to_days(args.t_peak) if args.t_peak is not None else fitting.detect_peak(series, args.smoothing).t_peak
    res = fitting.holdout_evaluate(series, args.family, t_peak, args.noise, args.train_fraction)
    w.json("holdout.json", {**res.to_dict(), "t_peak": t_peak, "train_fraction": args.train_fraction})
    return f"{args.family}: rmse {res.rmse:.6g} on {res.test_points} held-out points"


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="seed for stochastic steps (u64)")
    glob.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")
    glob.add_argument("--format", choices=("json", "csv"), default=argparse.SUPPRESS,
                      help="csv additionally writes tabular results as CSV")

    parser = argparse.ArgumentParser(prog="gamelife", description="Lifecycle analytics for online game populations.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=".")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    sub = parser.add_subparsers(dest="command", required=True)

    def series_args(p):
        p.add_argument("series", help="CSV with header date,players")
        p.add_argument("--meta", help="metadata JSON (default: <stem>.meta.json next to the CSV)")

    p = sub.add_parser("fit", parents=[glob], help="fit decay families and compare by AIC")
    series_args(p)
    p.add_argument("--families", default="exponential,weibull,power_law,lognormal")
    p.add_argument("--growth", default="", help="growth families fitted on pre-peak data (logistic,bass)")
    p.add_argument("--noise", choices=fitting.NOISE_MODELS, default="gaussian")
    p.add_argument("--smoothing", type=int, default=1, help="moving-average window for peak detection")
    p.add_argument("--peak", choices=("global", "final"), default="global")
    p.add_argument("--t-peak", help="override the detected peak time")
    p.add_argument("--n-boot", type=int, default=0)
    p.add_argument("--phi", type=float, help="project the crossing of this critical mass")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("simulate", parents=[glob], help="run the coupled novelty/cascade simulator")
    p.add_argument("scenario", help="scenario JSON")
    p.add_argument("--step", type=float)
    p.add_argument("--horizon", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phi", parents=[glob], help="estimate the critical-mass threshold")
    p.add_argument("profile", help="operational profile JSON")
    p.add_argument("--method", choices=("analytic", "sim", "both"), default="analytic")
    p.add_argument("--replications", type=int, default=50)
    p.add_argument("--matches", type=int, default=200, help="matches per replication")
    p.add_argument("--pop-hi", type=int)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("classify", parents=[glob], help="classify lifecycle states")
    series_args(p)
    p.add_argument("--config", help="JSON with phi, delta_coma, t_service")
    p.add_argument("--phi", type=float)
    p.add_argument("--delta-coma", type=float, default=90.0)
    p.add_argument("--as-of", help="classify a single instant instead of the whole span")
    p.add_argument("--no-meta", action="store_true", help="ignore launch/shutdown metadata")
    p.add_argument("--nu", type=float, help="memory forgetting rate; also writes preservation.json")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("presets", parents=[glob], help="write the packaged reference tables")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("holdout", parents=[glob], help="train/test evaluation of one decay family")
    series_args(p)
    p.add_argument("--family", default="exponential", choices=fitting.DECAY_FAMILIES)
    p.add_argument("--noise", choices=fitting.NOISE_MODELS, default="gaussian")
    p.add_argument("--train-fraction", type=float, default=0.7)
    p.add_argument("--smoothing", type=int, default=1)
    p.add_argument("--t-peak")
    p.set_defaults(func=cmd_holdout)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INPUT
    try:
        writer = _Writer(Path(args.out))
        line = args.func(args, writer)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{args.command}: {line}")
    for path in writer.paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
