"""
nlskg - Klein-Gordon wave packets and their NLS envelope approximation
Copyright (C) 2026 The nlskg authors

This file is part of nlskg.

nlskg is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

nlskg is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE. See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with nlskg. If not, see <https://www.gnu.org/licenses/>.
"""

import csv
import json
import math
import os

import numpy as np
import pytest

from nlskg import cli
from nlskg.classes import harness
from nlskg.classes.errors import ConfigError, FitError
from nlskg.classes.harness import (ExperimentConfig, ScalingFit, SweepReport, dt_halving_check, fit_power_law,
                                   resolved_band_mask, restrict_to_bands, run_energy_check, run_identity_suite,
                                   run_nonresonance_scan, run_validation, write_report)
from nlskg.classes.kg_solver import DiagonalState
from nlskg.classes.spectral import FourierGrid, SpectralField

SMALL = {"T0": 0.01, "eps_list": [0.2, 0.1, 0.05], "checkpoints": 2}


def test_default_config():
    cfg = ExperimentConfig()
    assert cfg.cutoff_delta == 0.25
    assert cfg.eps_list == [0.2, 0.141, 0.1, 0.071, 0.05]
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("changes", [
    {"eps_list": [0.1, 0.1]},
    {"eps_list": [0.05, 0.1]},
    {"eps_list": []},
    {"eps_list": [0.6]},
    {"residual_eps_list": [0.1, 0.2]},
    {"trials": 0},
    {"k0": -1.0},
    {"s": -1},
    {"dt": 0.5},
    {"envelope": "box"},
    {"cutoff_delta": 0.6},
    {"scheme": "euler"},
    {"workers": 0},
])
def test_invalid_config(changes):
    with pytest.raises(ConfigError):
        ExperimentConfig(**changes)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"k0": 1.0, "epsilon": 0.1})


def test_config_from_json(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"k0": 2.0, "trials": 3, "eps_list": [0.1, 0.05]}))
    cfg = ExperimentConfig.from_json(str(path))
    assert cfg.k0 == 2.0 and cfg.trials == 3
    assert cfg.cutoff_delta == 0.5
    assert cfg.eps_list == [0.1, 0.05]

    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(str(path))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json(str(tmp_path / "missing.json"))


def test_overrides():
    cfg = ExperimentConfig()
    changed = cfg.with_overrides(k0=2.0, seed=None, trials=7)
    assert changed.k0 == 2.0 and changed.cutoff_delta == 0.5
    assert changed.seed == cfg.seed and changed.trials == 7
    assert cfg.k0 == 1.0
    with pytest.raises(ConfigError):
        cfg.with_overrides(eps_list=[0.2, 0.2])


def test_exact_power_law():
    points = [(e, 3.0 * e ** 1.5) for e in (0.2, 0.1, 0.05, 0.025)]
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(1.5, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert fit.r2 == pytest.approx(1.0)


def test_constant_power_law():
    fit = fit_power_law([(0.2, 1.0), (0.1, 1.0), (0.05, 1.0)])
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == 1.0


def test_noisy_power_law():
    rng = np.random.default_rng(0)
    eps = np.geomspace(0.2, 0.01, 8)
    points = list(zip(eps, eps ** 2 * (1 + 0.01 * rng.standard_normal(8))))
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(2.0, abs=0.05)
    assert 0.99 < fit.r2 <= 1.0


@pytest.mark.parametrize("points", [
    [(0.2, 1.0), (0.1, 0.5)],
    [(0.2, 1.0), (0.1, 0.0), (0.05, 0.1)],
    [(0.2, 1.0), (0.1, float("nan")), (0.05, 0.1)],
    [(-0.2, 1.0), (0.1, 0.5), (0.05, 0.1)],
])
def test_power_law_rejects(points):
    with pytest.raises(FitError):
        fit_power_law(points)


def test_report_json():
    report = SweepReport(command="residual", config={"k0": 1.0}, records=[{"eps": 0.1}],
                         fits={"gap": fit_power_law([(0.2, 0.08), (0.1, 0.03), (0.05, 0.011)])},
                         flags={"gap_slope": True, "residual_slope": False})
    d = json.loads(json.dumps(report.to_dict()))
    assert d["passed"] is False
    back = SweepReport.from_dict(d)
    assert back.fits["gap"].slope == pytest.approx(report.fits["gap"].slope)
    assert back.flags == report.flags
    assert isinstance(back.fits["gap"], ScalingFit)


def test_synthetic_validation():
    cfg = ExperimentConfig(**SMALL)
    report = run_validation(cfg, solver="synthetic")
    fit = report.fits["hs_error"]
    assert fit.slope == pytest.approx(1.5, abs=1e-10)
    assert fit.r2 == pytest.approx(1.0)
    assert report.passed
    for record in report.records:
        assert record["sup_hs_error"] == pytest.approx(record["eps"] ** 1.5, rel=1e-10)
        assert record["sup_hs_error_full"] == pytest.approx(record["sup_hs_error"], rel=1e-12)
        assert len(record["trace"]) == cfg.checkpoints + 1
        assert record["hamiltonian_drift"] is None


@pytest.mark.slow
def test_kg_validation_default_sweep():
    report = run_validation(ExperimentConfig())
    fit = report.fits["hs_error"]
    assert 1.35 <= fit.slope <= 1.75, fit
    assert fit.r2 >= 0.98, fit
    assert report.flags["hs_slope"] and report.flags["all_survived"]
    for record in report.records:
        assert record["sup_hs_error_full"] > 0


def test_run_is_deterministic():
    cfg = ExperimentConfig(T0=0.01, eps_list=[0.2], checkpoints=2)
    first, state = harness._run_epsilon(cfg, 0.2)
    second, again = harness._run_epsilon(cfg, 0.2)
    assert first.trace == second.trace
    assert np.array_equal(state.as_array(), again.as_array())


def test_resolved_band_mask():
    grid = FourierGrid.for_carrier(1.0, 8, 256)
    mask = resolved_band_mask(grid, 1.0, 2)
    # |k| < 2.5 on the lattice k = j/8
    assert mask.sum() == 2 * 19 + 1
    coeffs = np.zeros(grid.n, dtype=complex)
    coeffs[[8, -8, 24, -24]] = 1.0
    field = SpectralField(coeffs, grid)
    kept = restrict_to_bands(DiagonalState(field, field * 0.0), mask)
    assert np.flatnonzero(kept.um1_hat.coeffs).tolist() == [8, grid.n - 8]
    assert restrict_to_bands(kept, None) is kept


def test_dt_halving_check():
    cfg = ExperimentConfig(**SMALL)
    result = dt_halving_check(cfg)
    assert result["eps"] == 0.2 and result["dt"] == cfg.dt
    assert 0 <= result["difference"] <= 0.1 * result["sup_hs_error"]
    assert result["passed"]


def test_validation_needs_three_eps():
    cfg = ExperimentConfig(T0=0.01, eps_list=[0.2, 0.1], checkpoints=1)
    with pytest.raises(FitError):
        run_validation(cfg, solver="synthetic")
    with pytest.raises(ConfigError):
        run_validation(cfg, solver="other")


def test_write_validation_report(tmp_path):
    report = run_validation(ExperimentConfig(**SMALL), solver="synthetic")
    written = write_report(report, str(tmp_path))
    assert sorted(os.path.basename(p) for p in written) == ["checkpoints.csv", "report.json", "sweep.csv"]
    with open(tmp_path / "report.json") as f:
        back = SweepReport.from_dict(json.load(f))
    assert back.passed
    assert back.fits["hs_error"].slope == pytest.approx(1.5, abs=1e-10)
    with open(tmp_path / "sweep.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert [float(r["eps"]) for r in rows] == [0.2, 0.1, 0.05]
    with open(tmp_path / "checkpoints.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 3 * 3
    assert {"t", "T", "hs_error", "E_s", "E_mod"} <= set(rows[0])


def test_identity_suite():
    cfg = ExperimentConfig(trials=5)
    report = run_identity_suite(cfg)
    assert report.passed, report.flags
    assert set(report.flags) == {"normal_form", "adjoint", "parts", "equivalence", "kernel_symmetry"}
    ratio = report.details["equivalence_ratio"]
    assert 0.4 <= ratio["min"] <= ratio["max"] <= 1.1
    sobolev = report.details["sobolev_equivalence_ratio"]
    assert 0 < sobolev["min"] <= sobolev["max"] <= ratio["max"]
    assert run_identity_suite(cfg).details == report.details


def test_nonresonance_scan():
    report = run_nonresonance_scan(ExperimentConfig(nonresonance_k1=[1.0, 2.0, 3.0]))
    assert report.passed
    values = [r["value"] for r in report.records if r["kind"] == "three_wave"]
    assert len(values) == 3
    assert values == sorted(values, reverse=True)
    assert len([r for r in report.records if r["kind"] == "harmonic"]) == 9


def test_energy_check():
    report = run_energy_check(ExperimentConfig(T0=1e-6, energy_eps=0.2))
    assert report.flags == {"finite": True, "coercive": True, "gronwall_bounded": True}
    assert report.details["E_mod_initial"] == pytest.approx(0.0, abs=1e-20)
    assert report.details["sup_E_mod"] <= 10.0
    assert report.details["band_limited"]
    assert [r["t"] for r in report.records] == pytest.approx([0.0, 2.5e-5])


def test_energy_check_flags_unbounded_growth(monkeypatch):
    def frozen(self, state, t_next, reference):
        return DiagonalState(state.um1_hat, state.up1_hat, t_next)

    monkeypatch.setattr(harness.KgSolver, "advance", frozen)
    report = run_energy_check(ExperimentConfig(T0=0.04, energy_eps=0.2))
    assert not report.flags["gronwall_bounded"]
    assert not report.passed
    assert report.details["sup_E_mod"] > 10.0 * (report.details["E_mod_initial"] + 1.0)


def test_cli_nonresonance(tmp_path):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"nonresonance_k1": [1.0, 2.0]}))
    out = tmp_path / "out"
    assert cli.main(["nonresonance", "--config", str(config), "--out", str(out), "-q"]) == 0
    assert (out / "report.json").exists()
    assert (out / "nonresonance.csv").exists()


def test_cli_invalid_input(tmp_path):
    assert cli.main(["validate", "--eps", "0.2,0.2", "--out", str(tmp_path), "-q"]) == 2
    assert cli.main(["identities", "--config", str(tmp_path / "missing.json"), "-q"]) == 2


def test_cli_eps_mapping():
    args = cli.build_parser().parse_args(["energy-check", "--eps", "0.1,0.05"])
    assert cli.load_config(args).energy_eps == 0.1
    args = cli.build_parser().parse_args(["residual", "--eps", "0.2,0.1,0.05"])
    assert cli.load_config(args).residual_eps_list == [0.2, 0.1, 0.05]
    args = cli.build_parser().parse_args(["validate", "--eps", "0.2,0.1,0.05", "--k0", "2"])
    cfg = cli.load_config(args)
    assert cfg.eps_list == [0.2, 0.1, 0.05] and cfg.cutoff_delta == 0.5
