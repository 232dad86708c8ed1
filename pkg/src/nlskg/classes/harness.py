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

"""
Experiment orchestration: epsilon sweeps of the approximation error,
residual and ansatz-gap sweeps, the identity suite, the non-resonance
scan and coefficient certification, with power-law fits and report
writers.
"""

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .approximation import (FIRST, SECOND, AnsatzBundle, band_residual_norms, build_grids,
                            certify_coefficients, compute_residual, derive_coefficients,
                            psi_time_derivative_check, scan_nu2)
from .dispersion import harmonic_nonresonance, nonresonance_constant
from .energy import (ErrorPair, PsiData, check_adjoint_identity, check_normal_form_identity,
                     check_parts_identities, check_splitting, energy, energy_trace,
                     equivalence_ratios, extract_error, kernel_n)
from .errors import BlowUpError, ConfigError, FitError
from .kg_solver import SCHEMES, DiagonalState, StepperConfig, hamiltonian, simulate, undiagonalize
from .nls_solver import NlsParams, initial_envelope, nls_evolve
from .spectral import (FourierGrid, SpectralField, band_cutoff_symbol, physical, random_band_limited,
                       sobolev_norm, weighted_l1_norm)

logger = logging.getLogger(__name__)

ENVELOPES = ("sech", "gaussian", "soliton")

HS_SLOPE_RANGE = (1.35, 1.75)
HS_MIN_R2 = 0.98
RESIDUAL_MIN_SLOPE = 2.4
GAP_SLOPE = 1.5
GAP_TOLERANCE = 0.1
CUTOFF_MIN_SLOPE = 2.0
PSI_CHECK_MIN_SLOPE = 1.9
IDENTITY_TOL = 1e-10
EQUIVALENCE_RANGE = (0.4, 1.1)
EQUIVALENCE_EPS = 0.05
GRONWALL_FACTOR = 10.0
DT_HALVING_FRACTION = 0.1
SIGN_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass
class ExperimentConfig():
    """
    Parameters of every experiment. Unknown keys are rejected when loading
    from JSON and every instance is validated on construction.
    """
    k0: float = 1.0
    s: int = 6
    T0: float = 1.0
    eps_list: list = field(default_factory=lambda: [0.2, 0.141, 0.1, 0.071, 0.05])
    envelope: str = "sech"
    domain_wavelengths: int = 1
    dt: float = 0.05
    dT_nls: float = 0.005
    cutoff_delta: float = None
    checkpoints: int = 64
    seed: int = 0
    output_dir: str = "nlskg-out"
    points_per_wavelength: int = 16
    slow_min_modes: int = 256
    max_band: int = 2
    residual_eps_list: list = field(default_factory=lambda: [0.2, 0.1, 0.05, 0.025])
    energy_eps: float = 0.1
    energy_stride_time: float = 0.5
    trials: int = 100
    identity_wavelengths: int = 8
    identity_modes: int = 256
    nonresonance_k1: list = field(default_factory=lambda: [1.0, 2.0, 3.0, 5.0, 10.0, 20.0])
    nonresonance_density: int = 100
    dt_halving_check: bool = False
    workers: int = 1
    scheme: str = "lawson_rk4"
    band_limited_error: bool = True

    def __post_init__(self):
        if self.cutoff_delta is None:
            self.cutoff_delta = self.k0 / 4
        self.eps_list = [float(e) for e in self.eps_list]
        self.residual_eps_list = [float(e) for e in self.residual_eps_list]
        self.nonresonance_k1 = [float(k) for k in self.nonresonance_k1]
        self.validate()

    @staticmethod
    def _check_eps_list(name, values):
        if len(values) == 0:
            raise ConfigError("{} must not be empty".format(name))
        for a, b in zip(values, values[1:]):
            if not b < a:
                raise ConfigError("{} must be strictly decreasing, got {} before {}".format(name, a, b))
        for e in values:
            if not 0 < e < 0.5:
                raise ConfigError("{} entries must lie in (0, 0.5), got {}".format(name, e))

    def validate(self):
        if not self.k0 > 0:
            raise ConfigError("k0 must be positive, got {}".format(self.k0))
        if self.s < 0:
            raise ConfigError("s must be >= 0, got {}".format(self.s))
        if not self.T0 > 0:
            raise ConfigError("T0 must be positive, got {}".format(self.T0))
        self._check_eps_list("eps_list", self.eps_list)
        self._check_eps_list("residual_eps_list", self.residual_eps_list)
        if not 0 < self.energy_eps < 0.5:
            raise ConfigError("energy_eps must lie in (0, 0.5), got {}".format(self.energy_eps))
        if self.envelope not in ENVELOPES:
            raise ConfigError("envelope must be one of {}, got '{}'".format(ENVELOPES, self.envelope))
        if self.domain_wavelengths < 1:
            raise ConfigError("domain_wavelengths must be >= 1, got {}".format(self.domain_wavelengths))
        if not 0 < self.dt <= 0.25:
            raise ConfigError("dt must lie in (0, 0.25], got {}".format(self.dt))
        if not self.dT_nls > 0:
            raise ConfigError("dT_nls must be positive, got {}".format(self.dT_nls))
        if not 0 < self.cutoff_delta < self.k0 / 2:
            raise ConfigError("cutoff_delta must lie in (0, k0/2), got {}".format(self.cutoff_delta))
        if self.max_band < 1:
            raise ConfigError("max_band must be >= 1, got {}".format(self.max_band))
        if self.checkpoints < 1:
            raise ConfigError("checkpoints must be >= 1, got {}".format(self.checkpoints))
        if not self.energy_stride_time > 0:
            raise ConfigError("energy_stride_time must be positive, got {}".format(self.energy_stride_time))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1, got {}".format(self.trials))
        if self.identity_wavelengths < 1 or self.identity_modes < 64:
            raise ConfigError("identity grid too small: {} wavelengths, {} modes".format(
                self.identity_wavelengths, self.identity_modes))
        if not self.nonresonance_k1 or min(self.nonresonance_k1) <= 0:
            raise ConfigError("nonresonance_k1 must hold positive values")
        if self.nonresonance_density < 100:
            raise ConfigError("nonresonance_density must be >= 100, got {}".format(self.nonresonance_density))
        if self.workers < 1:
            raise ConfigError("workers must be >= 1, got {}".format(self.workers))
        if self.scheme not in SCHEMES:
            raise ConfigError("unknown scheme '{}'".format(self.scheme))
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer, got {}".format(self.seed))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError("unknown configuration keys: {}".format(", ".join(unknown)))
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError("cannot read configuration {}: {}".format(path, e))
        if not isinstance(d, dict):
            raise ConfigError("configuration {} must hold a JSON object".format(path))
        return cls.from_dict(d)

    def with_overrides(self, **overrides):
        """
        Copy with every override that is not None applied.
        """
        changes = {k: v for k, v in overrides.items() if v is not None}
        if "k0" in changes and "cutoff_delta" not in changes:
            changes["cutoff_delta"] = changes["k0"] / 4
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass
class ScalingFit():
    slope: float
    intercept: float
    r2: float
    points: list

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "points": [[float(e), float(v)] for e, v in self.points]}

    @classmethod
    def from_dict(cls, d):
        return cls(slope=d["slope"], intercept=d["intercept"], r2=d["r2"],
                   points=[[e, v] for e, v in d["points"]])


def fit_power_law(points):
    """
    Least-squares line through (ln eps, ln value).

    @param points
    Sequence of (eps, value) with at least three entries, all positive.
    """
    points = [(float(e), float(v)) for e, v in points]
    if len(points) < 3:
        raise FitError("a power-law fit needs at least 3 points, got {}".format(len(points)))
    for e, v in points:
        if not (e > 0 and v > 0 and math.isfinite(e) and math.isfinite(v)):
            raise FitError("cannot fit non-positive or non-finite point ({}, {})".format(e, v))
    x = np.log([e for e, _ in points])
    y = np.log([v for _, v in points])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(slope=float(slope), intercept=float(intercept), r2=r2, points=points)


@dataclass
class SweepReport():
    """
    Result of one command: configuration echo, per-record data, fits and
    pass/fail flags. `details` holds everything else worth keeping.
    """
    command: str
    config: dict
    records: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(self.flags.values())

    def to_dict(self):
        return {"command": self.command, "config": self.config, "records": self.records,
                "fits": {name: fit.to_dict() for name, fit in self.fits.items()},
                "flags": dict(self.flags), "details": self.details, "passed": self.passed}

    @classmethod
    def from_dict(cls, d):
        return cls(command=d["command"], config=d["config"], records=d.get("records", []),
                   fits={name: ScalingFit.from_dict(f) for name, f in d.get("fits", {}).items()},
                   flags=d.get("flags", {}), details=d.get("details", {}))


def _fit_or_none(points):
    try:
        return fit_power_law(points)
    except FitError as e:
        logger.warning("fit skipped: %s", e)
        return None


def _hs_difference(a, b, s):
    return sobolev_norm(a.u_hat - b.u_hat, s)


def _linf_difference(a, b):
    return float(np.max(np.abs(physical(a.u_hat - b.u_hat))))


def resolved_band_mask(grid, k0, max_band):
    """
    |k| < (max_band + 1/2) k0: the harmonics 0..max_band the ansatz
    resolves, without the higher harmonics of the solution.
    """
    return np.abs(grid.wavenumbers) < (max_band + 0.5) * k0


def restrict_to_bands(d, mask):
    if mask is None:
        return d
    return DiagonalState(d.um1_hat.masked(mask), d.up1_hat.masked(mask), d.t)


def error_mask(cfg, grid):
    """
    Mask the approximation error is measured on, None for the full grid.
    """
    if not cfg.band_limited_error:
        return None
    return resolved_band_mask(grid, cfg.k0, cfg.max_band)


class KgSolver():
    """
    The diagonalized Klein-Gordon solver, advanced checkpoint by
    checkpoint.
    """
    name = "kg"

    def __init__(self, cfg, eps, grid, dt=None):
        self.cfg = cfg
        self.eps = eps
        self.grid = grid
        self.dt = cfg.dt if dt is None else dt

    def start(self, initial, reference):
        return initial

    def advance(self, state, t_next, reference):
        """
        @param reference
        First-order ansatz bundle current at t_next, unused here.
        """
        span = t_next - state.t
        steps = max(1, int(math.ceil(span / self.dt - 1e-9)))
        cfg = StepperConfig(dt=span / steps, scheme=self.cfg.scheme, t_end=span)
        summary = simulate(state, cfg)
        final = summary.state
        return DiagonalState(final.um1_hat, final.up1_hat, t_next)

    def invariant(self, state):
        return hamiltonian(undiagonalize(state))


class SyntheticSolver():
    """
    Pipeline self-test: returns the order-1 ansatz plus eps**(3/2) times a
    single mode of unit H^s norm in the u_1 slot, so the H^s error is
    exactly eps**(3/2).
    """
    name = "synthetic"

    def __init__(self, cfg, eps, grid, dt=None):
        self.cfg = cfg
        self.eps = eps
        j = 3
        coeffs = np.zeros(grid.n, dtype=complex)
        coeffs[j] = coeffs[-j] = 1.0
        unit = SpectralField(coeffs, grid)
        self.perturbation = unit / sobolev_norm(unit, cfg.s) * eps ** 1.5

    def start(self, initial, reference):
        return self.advance(initial, 0.0, reference)

    def advance(self, state, t_next, reference):
        d = reference.state(t_next)
        return DiagonalState(d.um1_hat, d.up1_hat + self.perturbation, t_next)

    def invariant(self, state):
        return None


SOLVERS = {"kg": KgSolver, "synthetic": SyntheticSolver}


@dataclass
class EpsilonRecord():
    eps: float
    wavelengths: int
    n_fast: int
    n_slow: int
    dt: float
    t_end: float
    sup_hs_error: float = None
    sup_hs_error_full: float = None
    sup_linf_error: float = None
    hamiltonian_drift: float = None
    energy: dict = None
    runtime: float = 0.0
    failed: bool = False
    failure: str = None
    trace: list = field(default_factory=list)

    def to_dict(self):
        return dataclasses.asdict(self)


def _run_epsilon(cfg, eps, solver_name="kg", dt=None):
    """
    One member of the validation sweep. Returns the record and the final
    state (None after a blow-up).
    """
    started = time.perf_counter()
    k0 = cfg.k0
    fast, slow = build_grids(eps, k0, cfg.domain_wavelengths, cfg.points_per_wavelength, cfg.slow_min_modes)
    coeffs = derive_coefficients(k0)
    params = NlsParams.from_coefficients(coeffs)
    envelope = initial_envelope(cfg.envelope, slow, params)
    order1 = AnsatzBundle(FIRST, eps, coeffs, envelope, fast)
    order2 = AnsatzBundle(SECOND, eps, coeffs, envelope, fast, cutoff_delta=cfg.cutoff_delta,
                          max_band=cfg.max_band)
    solver = SOLVERS[solver_name](cfg, eps, fast, dt)
    t_end = cfg.T0 / eps ** 2
    record = EpsilonRecord(eps=eps, wavelengths=int(round(fast.length * k0 / (2 * np.pi))), n_fast=fast.n,
                           n_slow=slow.n, dt=cfg.dt if dt is None else dt, t_end=t_end)
    logger.info("eps=%g: L=%.6g n=%d (slow n=%d), t_end=%.6g", eps, fast.length, fast.n, slow.n, t_end)

    mask = error_mask(cfg, fast)
    state = solver.start(order2.state(0.0), order1)
    h0 = solver.invariant(state)
    drift = 0.0
    sup_hs = sup_hs_full = sup_linf = 0.0
    sup_e = sup_e_mod = 0.0
    e_mod0 = None
    try:
        for i in range(cfg.checkpoints + 1):
            t = t_end * i / cfg.checkpoints
            if i > 0:
                envelope = nls_evolve(envelope, params, eps ** 2 * t, cfg.dT_nls)
                order1 = order1.with_envelope(envelope)
                order2 = order2.with_envelope(envelope)
                state = solver.advance(state, t, order1)
            reference = order1.state(t)
            measured = restrict_to_bands(state, mask)
            hs = _hs_difference(measured, reference, cfg.s)
            hs_full = _hs_difference(state, reference, cfg.s)
            linf = _linf_difference(measured, reference)
            ansatz = order2.state(t)
            b = energy(extract_error(measured, ansatz, eps), PsiData.from_ansatz(ansatz, eps), cfg.s)
            if e_mod0 is None:
                e_mod0 = b.e_modified
            h = solver.invariant(state)
            if h0 is not None and h is not None:
                drift = max(drift, abs(h - h0) / max(abs(h0), 1e-300))
            sup_hs = max(sup_hs, hs)
            sup_hs_full = max(sup_hs_full, hs_full)
            sup_linf = max(sup_linf, linf)
            sup_e = max(sup_e, b.e_total)
            sup_e_mod = max(sup_e_mod, b.e_modified)
            record.trace.append({"eps": eps, "t": t, "T": eps ** 2 * t, "hs_error": hs, "hs_error_full": hs_full,
                                 "linf_error": linf, "E_s": b.e_total, "E_mod": b.e_modified, "hamiltonian": h})
            logger.debug("eps=%g t=%.5g: |u - eps Psi|_H^s=%.4e", eps, t, hs)
    except BlowUpError as e:
        logger.warning("eps=%g failed: %s", eps, e)
        record.failed = True
        record.failure = str(e)
        state = None

    record.sup_hs_error = sup_hs
    record.sup_hs_error_full = sup_hs_full
    record.sup_linf_error = sup_linf
    record.hamiltonian_drift = drift if h0 is not None else None
    record.energy = {"sup_E_s": sup_e, "sup_E_mod": sup_e_mod, "E_mod_initial": e_mod0}
    record.runtime = time.perf_counter() - started
    logger.info("eps=%g done in %.1fs: sup H^s error %.4e", eps, record.runtime, sup_hs)
    return record, state


def _record_only(args):
    cfg, eps, solver_name = args
    return _run_epsilon(cfg, eps, solver_name)[0]


def run_validation(cfg, solver="kg"):
    """
    Sweep eps over cfg.eps_list, run to T0/eps**2 from the second-order
    cutoff ansatz and fit the sup-in-time distance to the first-order
    approximation against eps.

    @param solver
    'kg' for the Klein-Gordon solver or 'synthetic' for the pipeline
    self-test.
    """
    if solver not in SOLVERS:
        raise ConfigError("unknown solver '{}'".format(solver))
    tasks = [(cfg, eps, solver) for eps in cfg.eps_list]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            records = list(pool.map(_record_only, tasks))
    else:
        records = [_record_only(task) for task in tasks]

    survivors = [r for r in records if not r.failed]
    if len(survivors) < 3:
        raise FitError("only {} of {} eps values survived".format(len(survivors), len(records)))

    report = SweepReport(command="validate", config=cfg.to_dict(), records=[r.to_dict() for r in records])
    report.details["solver"] = solver
    report.fits["hs_error"] = fit_power_law([(r.eps, r.sup_hs_error) for r in survivors])
    for name, key in (("linf_error", "sup_linf_error"), ("hs_error_full", "sup_hs_error_full")):
        fit = _fit_or_none([(r.eps, getattr(r, key)) for r in survivors])
        if fit is not None:
            report.fits[name] = fit
    hs = report.fits["hs_error"]
    report.flags["hs_slope"] = bool(HS_SLOPE_RANGE[0] <= hs.slope <= HS_SLOPE_RANGE[1] and hs.r2 >= HS_MIN_R2)
    report.flags["all_survived"] = len(survivors) == len(records)
    drifts = [r.hamiltonian_drift for r in survivors if r.hamiltonian_drift is not None]
    report.details["max_hamiltonian_drift"] = max(drifts) if drifts else None
    logger.info("H^s error slope %.4f (r2=%.4f)", hs.slope, hs.r2)

    if cfg.dt_halving_check:
        report.details["dt_halving"] = dt_halving_check(cfg, solver)
        report.flags["dt_halving"] = report.details["dt_halving"]["passed"]
    return report


def dt_halving_check(cfg, solver="kg"):
    """
    Rerun the largest eps at dt/2 and compare final states. The time
    integration error must stay below a fraction of the measured error.
    """
    eps = cfg.eps_list[0]
    record, coarse = _run_epsilon(cfg, eps, solver)
    _, fine = _run_epsilon(cfg, eps, solver, dt=cfg.dt / 2)
    if coarse is None or fine is None:
        return {"eps": eps, "dt": cfg.dt, "difference": None, "sup_hs_error": record.sup_hs_error,
                "passed": False}
    mask = error_mask(cfg, coarse.grid)
    difference = _hs_difference(restrict_to_bands(coarse, mask), restrict_to_bands(fine, mask), cfg.s)
    passed = difference <= DT_HALVING_FRACTION * record.sup_hs_error
    logger.info("dt halving at eps=%g: difference %.3e vs error %.3e", eps, difference, record.sup_hs_error)
    return {"eps": eps, "dt": cfg.dt, "difference": difference, "sup_hs_error": record.sup_hs_error,
            "passed": bool(passed)}


def run_residual_sweep(cfg):
    """
    Residual of the second-order cutoff ansatz over cfg.residual_eps_list,
    and over cfg.eps_list the gap between the second-order cutoff ansatz
    and the first-order ansatz, the effect of the cutoff and the carrier
    time-derivative check.
    """
    coeffs = derive_coefficients(cfg.k0)
    params = NlsParams.from_coefficients(coeffs)
    report = SweepReport(command="residual", config=cfg.to_dict())

    def setup(eps):
        fast, slow = build_grids(eps, cfg.k0, cfg.domain_wavelengths, cfg.points_per_wavelength,
                                 cfg.slow_min_modes)
        envelope = initial_envelope(cfg.envelope, slow, params)
        cut = AnsatzBundle(SECOND, eps, coeffs, envelope, fast, cutoff_delta=cfg.cutoff_delta,
                           max_band=cfg.max_band)
        return fast, envelope, cut

    residual_points = []
    for eps in cfg.residual_eps_list:
        _, _, cut = setup(eps)
        res = compute_residual(cut)
        value = res.sobolev_norm(cfg.s)
        residual_points.append((eps, value))
        report.records.append({"kind": "residual", "eps": eps, "residual_hs": value})
        for (slot, band), norm in band_residual_norms(res, cfg.k0, cfg.s).items():
            report.records.append({"kind": "band", "eps": eps, "slot": slot, "band": band, "hs_norm": norm})
        logger.info("eps=%g: residual H^%d norm %.4e", eps, cfg.s, value)

    gap_points, cutoff_points, psi_points = [], [], []
    for eps in cfg.eps_list:
        fast, envelope, cut = setup(eps)
        order1 = AnsatzBundle(FIRST, eps, coeffs, envelope, fast)
        uncut = AnsatzBundle(SECOND, eps, coeffs, envelope, fast, cutoff=False)
        gap = _hs_difference(cut.state(), order1.state(), cfg.s)
        cutoff = _hs_difference(cut.state(), uncut.state(), cfg.s)
        psi = psi_time_derivative_check(cut, s=cfg.s)
        gap_points.append((eps, gap))
        cutoff_points.append((eps, cutoff))
        psi_points.append((eps, psi))
        report.records.append({"kind": "ansatz", "eps": eps, "gap_hs": gap, "cutoff_hs": cutoff,
                               "psi_check": psi})

    report.fits["residual"] = fit_power_law(residual_points)
    report.fits["gap"] = fit_power_law(gap_points)
    report.flags["residual_slope"] = report.fits["residual"].slope >= RESIDUAL_MIN_SLOPE
    report.flags["gap_slope"] = abs(report.fits["gap"].slope - GAP_SLOPE) <= GAP_TOLERANCE
    cutoff_fit = _fit_or_none(cutoff_points)
    if cutoff_fit is not None:
        report.fits["cutoff"] = cutoff_fit
        report.flags["cutoff_slope"] = cutoff_fit.slope >= CUTOFF_MIN_SLOPE
    psi_fit = _fit_or_none(psi_points)
    if psi_fit is not None:
        report.fits["psi_check"] = psi_fit
        report.flags["psi_check_slope"] = psi_fit.slope >= PSI_CHECK_MIN_SLOPE
    report.details["full_hierarchy_order"] = 4.5
    logger.info("residual slope %.3f, gap slope %.3f", report.fits["residual"].slope, report.fits["gap"].slope)
    return report


def _trial_rngs(seed, trials):
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(trials)]


def identity_grid(cfg):
    return FourierGrid.for_carrier(cfg.k0, cfg.identity_wavelengths, cfg.identity_modes)


def carrier_mask(grid, k0, delta, max_band):
    """
    Bands around j k0, 1 <= |j| <= max_band, where the carrier field lives.
    """
    inside = band_cutoff_symbol(k0, delta, max_band).on(grid) > 0
    return inside & (np.abs(grid.wavenumbers) > delta)


def random_psi(grid, rng, k0, delta, max_band, amplitude=1.0):
    """
    Random real carrier field supported in the harmonic bands, scaled to
    sum |c_j| = amplitude.
    """
    mask = carrier_mask(grid, k0, delta, max_band)
    top = int(np.max(np.abs(grid.index[mask])))
    psi = random_band_limited(grid, rng, top, mask=mask)
    return PsiData(psi / weighted_l1_norm(psi, 0) * amplitude)


def run_identity_suite(cfg):
    """
    Seeded random trials of the normal-form, adjoint and partial integration
    identities, the splitting constants and the energy equivalence.
    """
    grid = identity_grid(cfg)
    k0 = cfg.k0
    delta = cfg.cutoff_delta
    psi_top = int(np.max(np.abs(grid.index[carrier_mask(grid, k0, delta, cfg.max_band)])))
    f_top = grid.n // 6 - psi_top - 1
    if f_top < 2:
        raise ConfigError("identity grid of {} modes leaves no room beside the carrier bands".format(grid.n))
    r_top = max(2, int(2 * k0 / grid.dk))
    low_top = max(2, f_top // 2)

    worst = {"normal_form": {}, "adjoint": {}, "splitting_low": {}, "splitting_high": {}}
    for name in worst:
        for j1, j2 in SIGN_PAIRS:
            worst[name]["{},{}".format(j1, j2)] = 0.0
    parts = [0.0, 0.0]
    ratios = []
    sobolev_ratios = []
    high_mask = np.abs(grid.index) > low_top

    for rng in _trial_rngs(cfg.seed, cfg.trials):
        psi = random_psi(grid, rng, k0, delta, cfg.max_band)
        f = random_band_limited(grid, rng, f_top)
        g = random_band_limited(grid, rng, f_top)
        f_low = random_band_limited(grid, rng, low_top)
        f_high = random_band_limited(grid, rng, f_top, mask=high_mask)
        for j1, j2 in SIGN_PAIRS:
            key = "{},{}".format(j1, j2)
            for name, value in (("normal_form", check_normal_form_identity(psi, f, j1, j2)),
                                ("adjoint", check_adjoint_identity(psi, f, g, j1, j2)),
                                ("splitting_low", check_splitting(psi, f_low, j1, j2)),
                                ("splitting_high", check_splitting(psi, f_high, j1, j2))):
                worst[name][key] = max(worst[name][key], value)

        a_pair = (random_band_limited(grid, rng, f_top), random_band_limited(grid, rng, f_top))
        f_pair = (random_band_limited(grid, rng, f_top), random_band_limited(grid, rng, f_top))
        d50, d51 = check_parts_identities(a_pair, f_pair)
        parts = [max(parts[0], d50), max(parts[1], d51)]

        r_m1 = random_band_limited(grid, rng, r_top)
        r_p1 = random_band_limited(grid, rng, r_top)
        err = ErrorPair(r_m1=r_m1 / sobolev_norm(r_m1, cfg.s), r_p1=r_p1 / sobolev_norm(r_p1, cfg.s),
                        eps=EQUIVALENCE_EPS, t=0.0)
        by_derivatives, by_sobolev = equivalence_ratios(energy(err, psi, cfg.s), err)
        ratios.append(by_derivatives)
        sobolev_ratios.append(by_sobolev)

    report = SweepReport(command="identities", config=cfg.to_dict())
    report.details.update({"max_discrepancy": {"normal_form": worst["normal_form"], "adjoint": worst["adjoint"],
                                               "parts_integration": parts[0], "parts_rearrangement": parts[1]},
                           "splitting_constant": {"low": worst["splitting_low"], "high": worst["splitting_high"]},
                           "equivalence_ratio": {"min": min(ratios), "max": max(ratios), "eps": EQUIVALENCE_EPS},
                           "sobolev_equivalence_ratio": {"min": min(sobolev_ratios), "max": max(sobolev_ratios)},
                           "kernel_symmetry_defect": kernel_symmetry_defect(grid, k0, delta, cfg.max_band),
                           "trials": cfg.trials, "grid": {"n": grid.n, "length": grid.length}})
    report.flags["normal_form"] = max(worst["normal_form"].values()) <= IDENTITY_TOL
    report.flags["adjoint"] = max(worst["adjoint"].values()) <= IDENTITY_TOL
    report.flags["parts"] = max(parts) <= IDENTITY_TOL
    report.flags["equivalence"] = EQUIVALENCE_RANGE[0] <= min(ratios) and max(ratios) <= EQUIVALENCE_RANGE[1]
    report.flags["kernel_symmetry"] = report.details["kernel_symmetry_defect"] == 0.0
    for name, value in report.flags.items():
        logger.info("identity %s: %s", name, "pass" if value else "FAIL")
    return report


def kernel_symmetry_defect(grid, k0, delta, max_band):
    """
    max |n(-k, -p, -m) - n(k, p, m)| and max |Im n| over the grid with p
    in the carrier bands and k, m away from zero.
    """
    mask = carrier_mask(grid, k0, delta, max_band)
    keep = (grid.wavenumbers != 0) & (np.arange(grid.n) != grid.nyquist)
    k = grid.wavenumbers[keep]
    defect = 0.0
    for p in grid.wavenumbers[mask]:
        m = k - p
        nonzero = m != 0
        for j1, j2 in SIGN_PAIRS:
            n = kernel_n(k[nonzero], p, m[nonzero], j1, j2)
            n_reflected = kernel_n(-k[nonzero], -p, -m[nonzero], j1, j2)
            defect = max(defect, float(np.max(np.abs(n - n_reflected))), float(np.max(np.abs(np.imag(n)))))
    return defect


def run_nonresonance_scan(cfg):
    """
    Non-resonance constants for every k1 in cfg.nonresonance_k1 and the
    harmonic gaps m = 2..10.
    """
    report = SweepReport(command="nonresonance", config=cfg.to_dict())
    values = []
    for k1 in cfg.nonresonance_k1:
        result = nonresonance_constant(cfg.k0, k1, cfg.nonresonance_density)
        values.append(result.value)
        report.records.append({"kind": "three_wave", "k1": k1, "value": result.value, "k": result.k,
                               "p": result.p, "j1": result.j1, "j2": result.j2, "k_max": result.k_max,
                               "density": result.density})
        logger.info("k1=%g: C=%.8g", k1, result.value)
    gaps = harmonic_nonresonance(cfg.k0, 10)
    for m, gap in gaps:
        report.records.append({"kind": "harmonic", "m": m, "gap": gap})
    order = np.argsort(cfg.nonresonance_k1)
    ordered = [values[i] for i in order]
    report.flags["positive"] = min(values) > 0
    report.flags["monotone"] = all(b <= a + 1e-12 for a, b in zip(ordered, ordered[1:]))
    report.flags["harmonic_gaps"] = all(gap > 0 for _, gap in gaps)
    return report


def run_energy_check(cfg):
    """
    Energy trace along a run at cfg.energy_eps to T0/eps**2, sampled every
    cfg.energy_stride_time.
    """
    eps = cfg.energy_eps
    k0 = cfg.k0
    fast, slow = build_grids(eps, k0, cfg.domain_wavelengths, cfg.points_per_wavelength, cfg.slow_min_modes)
    coeffs = derive_coefficients(k0)
    params = NlsParams.from_coefficients(coeffs)
    bundle = AnsatzBundle(SECOND, eps, coeffs, initial_envelope(cfg.envelope, slow, params), fast,
                          cutoff_delta=cfg.cutoff_delta, max_band=cfg.max_band)
    t_end = cfg.T0 / eps ** 2
    samples = max(1, int(math.ceil(t_end / cfg.energy_stride_time - 1e-9)))
    solver = KgSolver(cfg, eps, fast)
    mask = error_mask(cfg, fast)

    def trajectory():
        state = bundle.state(0.0)
        yield restrict_to_bands(state, mask)
        for i in range(1, samples + 1):
            state = solver.advance(state, t_end * i / samples, None)
            yield restrict_to_bands(state, mask)

    holder = {"bundle": bundle}

    def ansatz_provider(t):
        b = holder["bundle"]
        b = b.with_envelope(nls_evolve(b.envelope, params, eps ** 2 * t, cfg.dT_nls))
        holder["bundle"] = b
        return b.state(t)

    report = SweepReport(command="energy-check", config=cfg.to_dict())
    try:
        trace = energy_trace(trajectory(), ansatz_provider, eps, cfg.s)
    except BlowUpError as e:
        logger.error("energy run failed: %s", e)
        report.details["failure"] = str(e)
        report.flags["finite"] = False
        report.flags["coercive"] = False
        report.flags["gronwall_bounded"] = False
        return report

    report.records = trace.rows()
    finite = all(math.isfinite(v) for v in trace.e_modified + trace.ratio)
    bounded = trace.gronwall_bounded(GRONWALL_FACTOR)
    report.details.update({"eps": eps, "sup_E_mod": trace.sup_e_modified, "E_mod_initial": trace.e_modified[0],
                           "min_E_s": min(trace.e_total), "sup_abs_ratio": trace.sup_ratio,
                           "gap_constant": trace.gap_constant, "band_limited": mask is not None})
    report.flags["finite"] = finite
    report.flags["coercive"] = trace.coercive
    report.flags["gronwall_bounded"] = bounded
    if not bounded:
        logger.warning("sup E_mod = %.4g exceeds %g (E_mod(0) + 1)", trace.sup_e_modified, GRONWALL_FACTOR)
    return report


def run_coefficients(cfg):
    """
    Derived coefficients, their band certificates and the nu2 scan.
    """
    coeffs = derive_coefficients(cfg.k0)
    report = SweepReport(command="coeffs", config=cfg.to_dict())
    report.details["coefficients"] = coeffs.as_dict()
    certificates = certify_coefficients(coeffs, cfg.residual_eps_list[-3:], cfg.s, cfg.envelope,
                                        cfg.points_per_wavelength, cfg.slow_min_modes)
    for c in certificates:
        report.records.append(dataclasses.asdict(c))
        report.flags["band_{}".format(c.band)] = c.passed
    scan = scan_nu2(coeffs, eps=cfg.residual_eps_list[-1], points_per_wavelength=cfg.points_per_wavelength,
                    slow_min_modes=cfg.slow_min_modes)
    report.details["nu2_scan"] = {"nu2": scan.nu2, "eps": scan.eps, "samples": scan.samples,
                                  "derived": coeffs.nu2}
    return report


def write_report(report, out_dir):
    """
    Write report.json and one CSV per table into out_dir.
    """
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
    written = [path]
    if report.command == "validate":
        written.append(write_csv(os.path.join(out_dir, "sweep.csv"),
                                 [{k: r[k] for k in ("eps", "wavelengths", "n_fast", "dt", "sup_hs_error",
                                                     "sup_hs_error_full", "sup_linf_error", "hamiltonian_drift",
                                                     "runtime", "failed")}
                                  for r in report.records]))
        written.append(write_csv(os.path.join(out_dir, "checkpoints.csv"),
                                 [row for r in report.records for row in r["trace"]]))
    elif report.records:
        written.append(write_csv(os.path.join(out_dir, "{}.csv".format(report.command.replace("-", "_"))),
                                 report.records))
    logger.info("wrote %s", ", ".join(written))
    return written


def write_csv(path, rows):
    columns = []
    for row in rows:
        for key in row:
            if key not in columns and not isinstance(row[key], (list, dict)):
                columns.append(key)
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path
