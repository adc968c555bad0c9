import json
import shutil
from pathlib import Path

import pytest

from gamelife.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def read(path):
    return json.loads(Path(path).read_text())


class TestFit:
    def test_lawbreakers_comparison(self, tmp_path, fixtures_dir, capsys):
        code = run("--out", tmp_path, "fit", fixtures_dir / "lawbreakers_like.csv", "--families", "exponential,weibull")
        assert code == 0
        comp = read(tmp_path / "comparison.json")
        assert comp["winner"] in ("exponential", "weibull")
        assert set(comp["delta_aic"]) == {"exponential", "weibull"}
        assert comp["delta_aic"][comp["winner"]] == 0
        header = (tmp_path / "fitcurve_exponential.csv").read_text().splitlines()[0]
        assert header == "t,observed,fitted,lo_band,hi_band"
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("fit: winner")
        assert all(Path(p).exists() for p in out[1:])

    def test_single_family(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "fit", fixtures_dir / "lawbreakers_like.csv", "--families", "exponential") == 0
        comp = read(tmp_path / "comparison.json")
        assert comp["winner"] == "exponential"
        assert not (tmp_path / "fit_weibull.json").exists()

    def test_missing_file(self, tmp_path, capsys):
        assert run("--out", tmp_path, "fit", tmp_path / "absent.csv") == 2
        assert "absent.csv" in capsys.readouterr().err

    def test_bootstrap_needs_seed(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "fit", fixtures_dir / "lawbreakers_like.csv", "--n-boot", "100") == 2

    def test_sawtooth_note(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "fit", fixtures_dir / "new_world_like.csv", "--families", "exponential", "--peak", "final")
        assert any("sawtooth" in n for n in read(tmp_path / "fit_exponential.json")["notes"])

    def test_growth_fits(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "fit", fixtures_dir / "evolve_like.csv", "--families", "exponential", "--growth", "logistic")
        assert "growth" in read(tmp_path / "comparison.json")

    def test_csv_format(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "--format", "csv", "fit", fixtures_dir / "lawbreakers_like.csv", "--families", "exponential")
        assert (tmp_path / "comparison.csv").exists()


class TestSimulate:
    def test_service_horizon(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "simulate", fixtures_dir / "scenario_service.json") == 0
        summary = read(tmp_path / "summary.json")
        assert summary["terminal_reason"] == "service_horizon" and summary["t_star"] == 30

    def test_finite_cap(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "simulate", fixtures_dir / "scenario_cap.json") == 0
        summary = read(tmp_path / "summary.json")
        assert summary["terminal_reason"] == "phi_crossing" and summary["t_star"] > 0
        assert summary["cascade"]["t_collapse"] == pytest.approx(summary["cascade"]["t_collapse_closed_form"], rel=1e-9)
        assert (tmp_path / "cascade.csv").exists() and (tmp_path / "simulation.csv").exists()

    def test_malformed_names_field(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"growth": {"K": 10, "r": 1}}))
        assert run("--out", tmp_path, "simulate", bad) == 2
        assert "growth.t0" in capsys.readouterr().err

    def test_invalid_json(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert run("--out", tmp_path, "simulate", bad) == 2


class TestPhi:
    def test_both_methods_agree(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "--seed", 3, "phi", fixtures_dir / "profile_unconstrained.json", "--method", "both") == 0
        out = read(tmp_path / "phi.json")
        assert abs(out["relative_difference"]) <= 0.05

    def test_roles_raise_threshold(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "--seed", 3, "phi", fixtures_dir / "profile_roles.json", "--method", "both")
        out = read(tmp_path / "phi.json")
        assert out["sim"]["phi"] > out["analytic"]["phi"]
        assert out["notes"]

    def test_sim_needs_seed(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "phi", fixtures_dir / "profile_roles.json", "--method", "sim") == 2

    def test_seed_after_subcommand(self, tmp_path, fixtures_dir):
        assert run("phi", fixtures_dir / "profile_unconstrained.json", "--method", "sim", "--seed", 1, "--out", tmp_path) == 0
        assert read(tmp_path / "phi.json")["sim"]["seed"] == 1

    def test_analytic(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "phi", fixtures_dir / "profile_unconstrained.json")
        assert read(tmp_path / "phi.json")["analytic"]["phi"] == 167


class TestClassify:
    def test_lawbreakers_ends_extinct(self, tmp_path, fixtures_dir):
        assert run("--out", tmp_path, "classify", fixtures_dir / "lawbreakers_like.csv", "--config", fixtures_dir / "config_phi58000.json") == 0
        assert read(tmp_path / "classification.json")["intervals"][-1]["state"] == "Omega3"

    def test_new_world_ends_dormant(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "classify", fixtures_dir / "new_world_like.csv", "--config", fixtures_dir / "config_phi58000.json")
        assert read(tmp_path / "classification.json")["final_state"] == "Omega1"

    def test_refuses_pre_start_query_without_metadata(self, tmp_path, fixtures_dir, capsys):
        csv = tmp_path / "bare.csv"
        shutil.copy(fixtures_dir / "evolve_like.csv", csv)
        code = run("--out", tmp_path, "classify", csv, "--phi", 8000, "--as-of", "2014-01-01")
        assert code == 2
        assert "launch" in capsys.readouterr().err

    def test_no_meta_flag(self, tmp_path, fixtures_dir):
        code = run("--out", tmp_path, "classify", fixtures_dir / "evolve_like.csv", "--phi", 8000, "--as-of", "2014-01-01", "--no-meta")
        assert code == 2
        assert run("--out", tmp_path, "classify", fixtures_dir / "evolve_like.csv", "--phi", 8000, "--as-of", "2014-01-01") == 0
        assert read(tmp_path / "classification.json")["query"]["state"] == "Omega0"

    def test_preservation_output(self, tmp_path, fixtures_dir):
        run("--out", tmp_path, "classify", fixtures_dir / "lawbreakers_like.csv", "--phi", 8000, "--nu", 0.001)
        assert read(tmp_path / "preservation.json")["window_status"] in {"closed", "closed_before_opening", "not_reached"}


def test_presets(tmp_path):
    assert run("--out", tmp_path, "--format", "csv", "presets") == 0
    data = read(tmp_path / "presets.json")
    moba = next(r for r in data["genre_half_lives"] if r["genre"] == "Competitive MOBA")
    fps = next(r for r in data["genre_half_lives"] if r["genre"] == "Annual FPS franchise")
    assert (moba["half_life_months_low"], moba["half_life_months_high"]) == (48, 96)
    assert (fps["half_life_months_low"], fps["half_life_months_high"]) == (12, 18)
    assert sorted(r["phi"] for r in data["phi_references"]) == [8000, 58000]
    assert (tmp_path / "presets_genres.csv").exists()


def test_holdout(tmp_path, fixtures_dir):
    assert run("--out", tmp_path, "holdout", fixtures_dir / "lawbreakers_like.csv", "--train-fraction", 0.6) == 0
    out = read(tmp_path / "holdout.json")
    assert out["rmse"] > 0 and out["test_points"] > 0


def test_bad_seed(tmp_path):
    assert run("--out", tmp_path, "--seed", -1, "presets") == 2


def test_module_entry_point(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "gamelife", "--out", str(tmp_path), "presets"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("presets:")
