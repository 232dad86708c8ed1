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

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError

logger = logging.getLogger(__name__)


def sign(k, zero_sign=1.0):
    """
    Sign of k with sign(0) := zero_sign (default +1).
    """
    k = np.asarray(k, dtype=float)
    return np.where(k > 0, 1.0, np.where(k < 0, -1.0, zero_sign))


def omega(k, zero_sign=1.0):
    """
    Dispersion branch omega(k) = sign(k) * sqrt(1 + k**2).
    """
    k = np.asarray(k, dtype=float)
    return sign(k, zero_sign) * np.sqrt(1.0 + k * k)


def rho(k):
    """
    Symbol of the quadratic term, rho(k) = sign(k) * k**2 / sqrt(1 + k**2).
    Vanishes at k = 0 for either sign convention.
    """
    k = np.asarray(k, dtype=float)
    return sign(k) * k * k / np.sqrt(1.0 + k * k)


def rho_prime(k):
    """
    Derivative of rho, |k| (2 + k**2) / (1 + k**2)**(3/2).
    """
    k = np.asarray(k, dtype=float)
    return np.abs(k) * (2.0 + k * k) / (1.0 + k * k) ** 1.5


def rho_quotient(k, m, tol=1e-10):
    """
    Difference quotient (rho(k) - rho(m)) / (k - m), with the limit
    rho'(m) substituted where |k - m| < tol.
    """
    k = np.asarray(k, dtype=float)
    m = np.asarray(m, dtype=float)
    diff = k - m
    near = np.abs(diff) < tol
    safe = np.where(near, 1.0, diff)
    return np.where(near, rho_prime(m), (rho(k) - rho(m)) / safe)


@dataclass(frozen=True)
class CarrierData():
    """
    Linear wave data of the carrier at the basic wavenumber k0.
    """
    k0: float
    omega0: float
    cg: float
    omega2: float

    @property
    def phase_velocity(self):
        return self.omega0 / self.k0


def carrier(k0):
    """
    Closed-form carrier data: omega0 = sqrt(1+k0**2), group velocity
    cg = k0/omega0 and curvature omega'' = (1+k0**2)**(-3/2).
    """
    if not k0 > 0:
        raise PreconditionError("carrier wavenumber must be positive, got {}".format(k0))
    q = 1.0 + k0 * k0
    omega0 = float(np.sqrt(q))
    return CarrierData(k0=float(k0), omega0=omega0, cg=k0 / omega0, omega2=q ** -1.5)


@dataclass(frozen=True)
class NonresonanceResult():
    """
    Scanned minimum of |-j1 omega(k) - omega(p) + j2 omega(k - p)| and the
    lattice point where it is attained.
    """
    value: float
    k: float
    p: float
    j1: int
    j2: int
    k_max: float
    density: int


def _branches(x):
    # both one-sided values of omega at a sign discontinuity
    if x == 0:
        return (1.0, -1.0)
    return (float(omega(x)),)


def nonresonance_constant(k0, k1, grid_density=1000, k_max=None):
    """
    Scan the three-wave non-resonance expression over k in [-K, K] and
    p in [-k1, k1] for all sign pairs (j1, j2).

    The scan runs on the integer lattice i / grid_density so that the
    discontinuities k = 0, p = 0 and k = p are hit exactly; there both
    one-sided values of omega are evaluated. The expression is invariant
    under (k, p) -> (-k, -p) up to the branch choice at zero, so only
    p >= 0 is scanned.

    @param k0
    Carrier wavenumber. It only enters through the default scan width.

    @param k1
    Half width of the p interval, i.e. the extent of the psi support.

    @param grid_density
    Lattice points per unit wavenumber, at least 100.

    @param k_max
    Half width K of the k interval, default max(10 k1, 50).
    """
    if not k0 > 0:
        raise PreconditionError("k0 must be positive, got {}".format(k0))
    if not k1 > 0:
        raise PreconditionError("k1 must be positive, got {}".format(k1))
    if grid_density < 100:
        raise PreconditionError("grid density must be >= 100 per unit, got {}".format(grid_density))
    if k_max is None:
        k_max = max(10.0 * k1, 50.0)

    n_k = int(round(k_max * grid_density))
    n_p = int(np.floor(k1 * grid_density + 1e-9))
    k_index = np.arange(-n_k, n_k + 1)
    k = k_index / grid_density
    omega_k = omega(k)
    signs = ((1, 1), (1, -1), (-1, 1), (-1, -1))

    best = (np.inf, 0.0, 0.0, 1, 1)
    for ip in range(0, n_p + 1):
        p = ip / grid_density
        omega_kp = omega((k_index - ip) / grid_density)
        for omega_p in _branches(p):
            for j1, j2 in signs:
                val = np.abs(-j1 * omega_k - omega_p + j2 * omega_kp)
                i = int(np.argmin(val))
                if val[i] < best[0]:
                    best = (float(val[i]), float(k[i]), p, j1, j2)

        # one-sided values at k = 0 and k = p
        for kk in {0.0, p}:
            for wk, wp, wkp in itertools.product(_branches(kk), _branches(p), _branches(kk - p)):
                for j1, j2 in signs:
                    v = abs(-j1 * wk - wp + j2 * wkp)
                    if v < best[0]:
                        best = (v, kk, p, j1, j2)

    value, kk, p, j1, j2 = best
    logger.debug("nonresonance k1=%g: C=%.10g at k=%g p=%g (j1=%d, j2=%d)", k1, value, kk, p, j1, j2)
    return NonresonanceResult(value=value, k=kk, p=p, j1=j1, j2=j2, k_max=float(k_max),
                              density=int(grid_density))


def harmonic_nonresonance(k0, m_max):
    """
    Gaps min(|omega(m k0) - m omega0|, |omega(m k0) + m omega0|) for
    m = 2..m_max.
    """
    if m_max < 2:
        raise PreconditionError("m_max must be >= 2, got {}".format(m_max))
    if not k0 > 0:
        raise PreconditionError("k0 must be positive, got {}".format(k0))
    omega0 = float(omega(k0))
    gaps = []
    for m in range(2, m_max + 1):
        wm = float(omega(m * k0))
        gaps.append((m, min(abs(wm - m * omega0), abs(wm + m * omega0))))
    return gaps
