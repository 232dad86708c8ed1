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
Pseudo-spectral integration of the quasilinear Klein-Gordon equation

    u_tt = u_xx - u + (u**2)_xx

in the diagonalized first-order form

    d/dt u_{-1} = -i omega u_{-1} - (i/2) rho (u_{-1} + u_1)**2
    d/dt u_1    = +i omega u_1    + (i/2) rho (u_{-1} + u_1)**2

with u = u_{-1} + u_1, v = u_{-1} - u_1 and u_t = -i omega v, and in the
second-order form (u, u_t).
"""

import logging
import sys
from dataclasses import dataclass

import numpy as np

from .dispersion import omega, rho
from .errors import BlowUpError, ConfigError, ZeroModeError
from .spectral import SpectralField, dealiased_coeffs, inverse_transform
from .steppers.lawson_rk4 import LawsonRK4
from .steppers.strang_split import StrangSplit

logger = logging.getLogger(__name__)

ZERO_MODE_TOL = 1e-12
BLOW_UP_THRESHOLD = 1e6

SCHEMES = {
    "lawson_rk4": "LawsonRK4",
    "strang_split": "StrangSplit",
}


def str_to_class(name):
    return getattr(sys.modules[__name__], name)


class KgState():
    """
    Position u and velocity w = u_t of a real zero-mean solution.
    """

    def __init__(self, u_hat, w_hat, t=0.0):
        u_hat.grid.check_same(w_hat.grid, "position and velocity")
        self.u_hat = u_hat
        self.w_hat = w_hat
        self.t = float(t)
        self.grid = u_hat.grid

    def physical(self):
        """
        Samples (u, u_t) as two real arrays.
        """
        return inverse_transform(self.u_hat).values, inverse_transform(self.w_hat).values


class DiagonalState():
    """
    The pair (u_{-1}, u_1). Each component is a real field on its own.
    """

    def __init__(self, um1_hat, up1_hat, t=0.0):
        um1_hat.grid.check_same(up1_hat.grid, "diagonal components")
        self.um1_hat = um1_hat
        self.up1_hat = up1_hat
        self.t = float(t)
        self.grid = um1_hat.grid

    @classmethod
    def from_array(cls, y, grid, t):
        return cls(SpectralField(y[0], grid), SpectralField(y[1], grid), t)

    def as_array(self):
        return np.stack([self.um1_hat.coeffs, self.up1_hat.coeffs])

    @property
    def u_hat(self):
        return self.um1_hat + self.up1_hat

    def __add__(self, other):
        return DiagonalState(self.um1_hat + other.um1_hat, self.up1_hat + other.up1_hat, self.t)

    def __sub__(self, other):
        return DiagonalState(self.um1_hat - other.um1_hat, self.up1_hat - other.up1_hat, self.t)


@dataclass
class StepperConfig():
    """
    Time stepping parameters. t_end = 0 is allowed and yields the initial
    state only.
    """
    dt: float = 0.05
    scheme: str = "lawson_rk4"
    t_end: float = 0.0
    observer_stride: int = 1
    nonlinearity: bool = True

    def __post_init__(self):
        if not 0 < self.dt <= 0.25:
            raise ConfigError("dt must lie in (0, 0.25], got {}".format(self.dt))
        if self.scheme not in SCHEMES:
            raise ConfigError("unknown scheme '{}', expected one of {}".format(self.scheme, sorted(SCHEMES)))
        if self.t_end < 0:
            raise ConfigError("t_end must be non-negative, got {}".format(self.t_end))
        if self.observer_stride < 1:
            raise ConfigError("observer stride must be >= 1, got {}".format(self.observer_stride))

    @property
    def steps(self):
        return int(np.floor(self.t_end / self.dt + 1e-9))


def _check_zero_mean(*fields):
    for f in fields:
        if abs(f.mean) > ZERO_MODE_TOL:
            raise ZeroModeError("field has nonzero mean |c_0| = {:.3e}".format(abs(f.mean)))


def diagonalize(s):
    """
    (u, w) -> (u_{-1}, u_1) with v = w / (-i omega). The unpaired Nyquist
    coefficient is dropped.
    """
    _check_zero_mean(s.u_hat, s.w_hat)
    grid = s.grid
    v = s.w_hat.coeffs / (-1j * omega(grid.wavenumbers))
    u = s.u_hat.coeffs
    um1 = 0.5 * (u + v)
    up1 = 0.5 * (u - v)
    for c in (um1, up1):
        c[0] = 0.0
        c[grid.nyquist] = 0.0
    return DiagonalState(SpectralField(um1, grid), SpectralField(up1, grid), s.t)


def undiagonalize(d):
    _check_zero_mean(d.um1_hat, d.up1_hat)
    grid = d.grid
    u = d.um1_hat.coeffs + d.up1_hat.coeffs
    w = -1j * omega(grid.wavenumbers) * (d.um1_hat.coeffs - d.up1_hat.coeffs)
    return KgState(SpectralField(u, grid), SpectralField(w, grid), d.t)


class DiagonalSystem():
    """
    Linear flow and quadratic term of the diagonalized system, acting on
    arrays of shape (2, n).
    """

    def __init__(self, grid, nonlinearity=True):
        self.grid = grid
        self.nonlinearity = nonlinearity
        self.omega = omega(grid.wavenumbers)
        self.rho = rho(grid.wavenumbers)
        self.generator = np.stack([-1j * self.omega, 1j * self.omega])
        self._flows = {}

    def propagate(self, y, h):
        flow = self._flows.get(h)
        if flow is None:
            flow = self._flows[h] = np.exp(h * self.generator)
        return flow * y

    def nonlinear(self, y):
        u = y[0] + y[1]
        forcing = 0.5j * self.rho * dealiased_coeffs(u, u, self.grid)
        return np.stack([-forcing, forcing])


class SecondOrderSystem():
    """
    d/dt (u, w) = (w, -(1 + k**2) u - k**2 (u*u)) with the linear block
    integrated as a rotation of every mode.
    """

    def __init__(self, grid, nonlinearity=True):
        self.grid = grid
        self.nonlinearity = nonlinearity
        k = grid.wavenumbers
        self.frequency = np.sqrt(1.0 + k * k)
        self.k2 = k * k
        self._flows = {}

    def propagate(self, y, h):
        flow = self._flows.get(h)
        if flow is None:
            c = np.cos(self.frequency * h)
            s = np.sin(self.frequency * h)
            flow = self._flows[h] = (c, s / self.frequency, -self.frequency * s)
        c, s_over_w, w_s = flow
        return np.stack([c * y[0] + s_over_w * y[1], w_s * y[0] + c * y[1]])

    def nonlinear(self, y):
        forcing = -self.k2 * dealiased_coeffs(y[0], y[0], self.grid)
        return np.stack([np.zeros_like(forcing), forcing])


def make_stepper(cfg, system):
    return str_to_class(SCHEMES[cfg.scheme])(system)


def _check_finite(y, t):
    if not np.all(np.isfinite(y)):
        raise BlowUpError(t, "non-finite spectral coefficients")
    peak = float(np.max(np.abs(y)))
    if peak > BLOW_UP_THRESHOLD:
        raise BlowUpError(t, "coefficient modulus {:.3e} exceeds {:.0e}".format(peak, BLOW_UP_THRESHOLD))
    mean = float(np.max(np.abs(y[:, 0])))
    if mean > ZERO_MODE_TOL:
        raise ZeroModeError("t={:.6g}: mean drifted to {:.3e}".format(t, mean))


def rhs_diagonal(d, nonlinearity=True):
    """
    Time derivatives (d/dt u_{-1}, d/dt u_1) of the diagonalized system.
    """
    system = DiagonalSystem(d.grid, nonlinearity)
    y = d.as_array()
    dy = system.generator * y
    if nonlinearity:
        dy = dy + system.nonlinear(y)
    return SpectralField(dy[0], d.grid), SpectralField(dy[1], d.grid)


def propagate_linear(d, dt):
    """
    Exact linear flow over dt (any sign).
    """
    y = DiagonalSystem(d.grid).propagate(d.as_array(), dt)
    return DiagonalState.from_array(y, d.grid, d.t + dt)


def step(d, cfg):
    """
    One step of cfg.scheme on the diagonalized system.
    """
    stepper = make_stepper(cfg, DiagonalSystem(d.grid, cfg.nonlinearity))
    t = d.t + cfg.dt
    y = stepper.step(d.as_array(), cfg.dt)
    _check_finite(y, t)
    return DiagonalState.from_array(y, d.grid, t)


def step_second_order(s, cfg):
    """
    One step of cfg.scheme on the second-order formulation.
    """
    stepper = make_stepper(cfg, SecondOrderSystem(s.grid, cfg.nonlinearity))
    t = s.t + cfg.dt
    y = stepper.step(np.stack([s.u_hat.coeffs, s.w_hat.coeffs]), cfg.dt)
    _check_finite(y, t)
    return KgState(SpectralField(y[0], s.grid), SpectralField(y[1], s.grid), t)


def hamiltonian(s):
    """
    Conserved energy of the band-limited dynamics,

        H = int p**2/2 + u**2/2 + (d_x^{-1} u)**2/2 + (P u)**3/3 dx,

    with p = d_x^{-1} u_t and P the 2/3-rule projection.
    """
    _check_zero_mean(s.u_hat, s.w_hat)
    grid = s.grid
    k = grid.wavenumbers
    nonzero = k != 0
    safe_k2 = np.where(nonzero, k * k, 1.0)
    u = s.u_hat.coeffs
    w = s.w_hat.coeffs
    quadratic = np.sum(np.where(nonzero, (np.abs(w) ** 2 + np.abs(u) ** 2) / safe_k2, 0.0) + np.abs(u) ** 2)
    cubic = np.real(np.sum(np.conj(u) * dealiased_coeffs(u, u, grid)))
    return float(grid.length * (0.5 * quadratic + cubic / 3.0))


def _run(y, t0, cfg, stepper, wrap, observers):
    steps = cfg.steps
    stride = cfg.observer_stride
    observations = 0
    state = wrap(y, t0)
    for observer in observers:
        observer(state)
    observations += 1
    progress = max(1, steps // 10)
    for i in range(1, steps + 1):
        t = t0 + i * cfg.dt
        try:
            y = stepper.step(y, cfg.dt)
            _check_finite(y, t)
        except BlowUpError:
            logger.warning("blow-up at t=%.6g", t)
            raise
        if i % stride == 0:
            state = wrap(y, t)
            for observer in observers:
                observer(state)
            observations += 1
        if i % progress == 0:
            logger.debug("step %d/%d, t=%.4g", i, steps, t)
    return wrap(y, t0 + steps * cfg.dt), steps, observations


@dataclass
class TrajectorySummary():
    state: object
    steps: int
    observations: int
    t_end: float


def simulate(d, cfg, observers=()):
    """
    Integrate the diagonalized system to d.t + cfg.t_end and call every
    observer with the state at step 0 and every cfg.observer_stride steps.

    @param observers
    Callables taking a DiagonalState.
    """
    stepper = make_stepper(cfg, DiagonalSystem(d.grid, cfg.nonlinearity))
    wrap = lambda y, t: DiagonalState.from_array(y, d.grid, t)
    state, steps, observations = _run(d.as_array(), d.t, cfg, stepper, wrap, observers)
    return TrajectorySummary(state=state, steps=steps, observations=observations, t_end=state.t)


def simulate_second_order(s, cfg, observers=()):
    stepper = make_stepper(cfg, SecondOrderSystem(s.grid, cfg.nonlinearity))
    wrap = lambda y, t: KgState(SpectralField(y[0], s.grid), SpectralField(y[1], s.grid), t)
    y = np.stack([s.u_hat.coeffs, s.w_hat.coeffs])
    state, steps, observations = _run(y, s.t, cfg, stepper, wrap, observers)
    return TrajectorySummary(state=state, steps=steps, observations=observations, t_end=state.t)
