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
Split-step solver for the envelope equation

    A_T = i nu1 A_XX + i nu2 |A|**2 A

on the slow periodic grid, exact solutions, and evaluation of the envelope
at the fast-grid arguments eps (x - cg t).
"""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import (BlowUpError, GridMismatchError, PreconditionError,
                     StaleEnvelopeError, UnsupportedRegimeError)
from .spectral import complex_inverse_transform, complex_transform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NlsParams():
    nu1: float
    nu2: float
    k0: float

    def __post_init__(self):
        if not self.nu1 > 0:
            raise PreconditionError("nu1 must be positive, got {}".format(self.nu1))

    @classmethod
    def from_coefficients(cls, coeffs):
        return cls(nu1=coeffs.nu1, nu2=coeffs.nu2, k0=coeffs.carrier.k0)

    @property
    def focusing(self):
        return self.nu1 * self.nu2 > 0


class Envelope():
    """
    Complex amplitude A(X) = sum_j a_j exp(i K_j X) on a slow grid at slow
    time T. The coefficients carry no symmetry.
    """

    def __init__(self, a_hat, grid, T=0.0):
        a_hat = np.array(a_hat, dtype=complex)
        if a_hat.shape != (grid.n,):
            raise GridMismatchError("expected {} coefficients, got shape {}".format(grid.n, a_hat.shape))
        if not np.all(np.isfinite(a_hat)):
            raise BlowUpError(T, "envelope has non-finite coefficients")
        a_hat.setflags(write=False)
        self.a_hat = a_hat
        self.grid = grid
        self.T = float(T)

    @classmethod
    def from_values(cls, values, grid, T=0.0):
        return cls(complex_transform(values, grid), grid, T)

    @classmethod
    def from_function(cls, func, grid, T=0.0):
        return cls.from_values(func(grid.x), grid, T)

    def values(self):
        return complex_inverse_transform(self.a_hat, self.grid)

    def derivative(self, order=1):
        return complex_inverse_transform((1j * self.grid.wavenumbers) ** order * self.a_hat, self.grid)

    def mass(self):
        return float(self.grid.length * np.sum(np.abs(self.a_hat) ** 2))

    def momentum(self):
        """
        int conj(A) (-i A_X) dX, conserved by the envelope equation.
        """
        return float(self.grid.length * np.sum(self.grid.wavenumbers * np.abs(self.a_hat) ** 2))

    def time_derivative(self, params, nonlinearity=True):
        """
        A_T from the right-hand side of the envelope equation, as samples.
        """
        a_t = 1j * params.nu1 * self.derivative(2)
        if nonlinearity:
            a = self.values()
            a_t = a_t + 1j * params.nu2 * np.abs(a) ** 2 * a
        return a_t


def nls_step(e, p, dT):
    """
    One Strang step: half nonlinear phase rotation, exact dispersive step
    in Fourier space, half nonlinear rotation.
    """
    if not dT > 0:
        raise PreconditionError("dT must be positive, got {}".format(dT))
    grid = e.grid
    a = e.values()
    a = a * np.exp(0.5j * p.nu2 * np.abs(a) ** 2 * dT)
    a_hat = complex_transform(a, grid) * np.exp(-1j * p.nu1 * grid.wavenumbers ** 2 * dT)
    a = complex_inverse_transform(a_hat, grid)
    a = a * np.exp(0.5j * p.nu2 * np.abs(a) ** 2 * dT)
    T = e.T + dT
    if not np.all(np.isfinite(a)):
        raise BlowUpError(T, "envelope blew up")
    return Envelope(complex_transform(a, grid), grid, T)


def nls_evolve(e, p, T_end, dT):
    """
    Evolve to T_end with equal steps no longer than dT, landing exactly on
    T_end.
    """
    span = T_end - e.T
    if span < -1e-14:
        raise PreconditionError("cannot evolve backwards from T={} to T={}".format(e.T, T_end))
    if span <= 0:
        return e
    n = int(np.ceil(span / dT - 1e-9))
    h = span / n
    for _ in range(n):
        e = nls_step(e, p, h)
    return Envelope(e.a_hat, e.grid, T_end)


class Soliton():
    """
    Bright soliton A(X, T) = eta sqrt(2 nu1/nu2) sech(eta X) exp(i nu1 eta**2 T)
    of the focusing equation.
    """

    def __init__(self, params, eta=1.0):
        """
        @param params
        NlsParams with nu1 nu2 > 0.

        @param eta
        Inverse width, positive.
        """
        if not params.focusing:
            raise UnsupportedRegimeError(
                "no bright soliton for nu1={}, nu2={} (defocusing)".format(params.nu1, params.nu2))
        if not eta > 0:
            raise PreconditionError("eta must be positive, got {}".format(eta))
        self.params = params
        self.eta = float(eta)
        self.amplitude = self.eta * np.sqrt(2.0 * params.nu1 / params.nu2)
        self.frequency = params.nu1 * self.eta ** 2

    def __call__(self, X, T=0.0):
        X = np.asarray(X, dtype=float)
        return self.amplitude / np.cosh(self.eta * X) * np.exp(1j * self.frequency * T)

    def envelope(self, grid, T=0.0):
        return Envelope.from_values(self(grid.x, T), grid, T)


def free_gaussian(X, T, nu1, width=1.0):
    """
    Solution of A_T = i nu1 A_XX with A(X, 0) = exp(-X**2 / (2 width**2)).
    """
    X = np.asarray(X, dtype=float)
    spread = width ** 2 + 2j * nu1 * T
    return np.sqrt(width ** 2 / spread) * np.exp(-X ** 2 / (2.0 * spread))


def initial_envelope(kind, grid, params=None, eta=1.0):
    """
    Envelope at T = 0 of the given kind: 'sech', 'gaussian' or 'soliton'.
    """
    if kind == "sech":
        return Envelope.from_function(lambda X: 1.0 / np.cosh(eta * X) + 0j, grid)
    if kind == "gaussian":
        return Envelope.from_function(lambda X: np.exp(-(eta * X) ** 2) + 0j, grid)
    if kind == "soliton":
        return Soliton(params, eta).envelope(grid)
    raise PreconditionError("unknown envelope kind '{}'".format(kind))


def shifted_on_fast_grid(a_hat, slow, fast, eps, cg, t):
    """
    Samples of sum_j a_j exp(i K_j eps (x - cg t)) at the fast points.
    Slow mode j becomes fast mode j since K_j eps = k_j.
    """
    if abs(slow.length - eps * fast.length) > 1e-12 * slow.length:
        raise GridMismatchError("slow period {} is not eps * fast period = {}".format(
            slow.length, eps * fast.length))
    if slow.n > fast.n:
        raise GridMismatchError("slow grid ({} points) is finer than fast grid ({} points)".format(
            slow.n, fast.n))
    shifted = np.zeros(fast.n, dtype=complex)
    shifted[slow.index % fast.n] = a_hat * np.exp(-1j * slow.wavenumbers * eps * cg * t)
    return complex_inverse_transform(shifted, fast)


def evaluate_on_fast_grid(e, fast, eps, cg, t):
    """
    A(eps (x_n - cg t), eps**2 t) at every fast collocation point x_n, by
    spectral interpolation. The envelope must be current at T = eps**2 t.
    """
    T = eps * eps * t
    if abs(e.T - T) > 1e-12 * max(1.0, abs(T)):
        raise StaleEnvelopeError("envelope is at T={} but eps**2 t = {}".format(e.T, T))
    return shifted_on_fast_grid(e.a_hat, e.grid, fast, eps, cg, t)
