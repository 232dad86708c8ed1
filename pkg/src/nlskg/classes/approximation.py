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
Modulation coefficients, the wave-packet ansatz with Fourier-band cutoff,
and its residual in the diagonalized Klein-Gordon system.

The ansatz in the (u_{-1}, u_1) slots reads

    u_{-1} = 2 Re(eps A E + eps**2 a21 A**2 E**2) + eps**2 a01 |A|**2
    u_1    = 2 Re(eps**2 a22 A**2 E**2) + eps**2 a02 |A|**2

with E = exp(i (k0 x - omega0 t)) and A evaluated at
(X, T) = (eps (x - cg t), eps**2 t).
"""

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import carrier, omega, rho
from .errors import PreconditionError, ResonanceError
from .kg_solver import DiagonalState, rhs_diagonal
from .nls_solver import (NlsParams, evaluate_on_fast_grid, initial_envelope,
                         shifted_on_fast_grid)
from .spectral import (FourierGrid, RealField, SpectralField, band_cutoff_symbol,
                       complex_transform, sobolev_norm, transform, weighted_l1_norm)

logger = logging.getLogger(__name__)

FIRST = "first"
SECOND = "second"
DENOMINATOR_GUARD = 1e-12


@dataclass(frozen=True)
class CoefficientSet():
    """
    Carrier data, envelope equation coefficients and the amplitude ratios
    of the second harmonic (a21, a22) and mean flow (a01, a02) relative to
    A**2 and |A|**2.
    """
    carrier: object
    nu1: float
    nu2: float
    gamma21: float
    gamma22: float
    a21: float
    a22: float
    a01: float
    a02: float
    gamma01: float = 0.0
    gamma02: float = 0.0

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def as_dict(self):
        d = dataclasses.asdict(self)
        d["carrier"] = dataclasses.asdict(self.carrier)
        return d


def derive_coefficients(k0):
    """
    Equate the coefficients of eps**m E**j in the diagonalized system.

    Second harmonic (eps**2 E**2):
        (-2 omega0 + omega(2 k0)) a21 = gamma21 = -rho(2 k0)/2
        (-2 omega0 - omega(2 k0)) a22 = gamma22 = +rho(2 k0)/2
    Mean flow (eps**2 E**0), using the one-sided limits omega(0-) = -1
    and omega(0+) = 1:
        -a01 = gamma01 = -rho(0),  a02 = gamma02 = rho(0)
    Cubic term (eps**3 E**1) after eliminating the second harmonic and
    mean flow:
        nu2 = -rho(k0) (a21 + a22 + a01 + a02)
    """
    c = carrier(k0)
    omega2k = float(omega(2 * k0))
    rho2k = float(rho(2 * k0))
    rho0 = float(rho(0.0))

    d21 = -2 * c.omega0 + omega2k
    d22 = -2 * c.omega0 - omega2k
    for name, d in (("-2 omega0 + omega(2 k0)", d21), ("-2 omega0 - omega(2 k0)", d22)):
        if abs(d) < DENOMINATOR_GUARD:
            raise ResonanceError("second harmonic is resonant at k0={}: {} = {:.3e}".format(k0, name, d))

    gamma21 = -0.5 * rho2k
    gamma22 = 0.5 * rho2k
    gamma01 = -rho0
    gamma02 = rho0
    a21 = gamma21 / d21
    a22 = gamma22 / d22
    a01 = gamma01 / -1.0 + 0.0
    a02 = gamma02 / 1.0 + 0.0
    nu2 = -float(rho(k0)) * (a21 + a22 + a01 + a02)

    coeffs = CoefficientSet(carrier=c, nu1=0.5 * c.omega2, nu2=nu2, gamma21=gamma21, gamma22=gamma22,
                            a21=a21, a22=a22, a01=a01, a02=a02, gamma01=gamma01, gamma02=gamma02)
    logger.debug("coefficients for k0=%g: %s", k0, coeffs)
    return coeffs


def build_grids(eps, k0, min_wavelengths=1, points_per_wavelength=16, slow_min_modes=256):
    """
    Fast grid of m carrier wavelengths with L = 2 pi m / k0 >= 40/eps and
    a power-of-two point count of at least points_per_wavelength * m, and
    the slow grid of period eps L.
    """
    m = max(int(min_wavelengths), int(math.ceil(40.0 * k0 / (2 * np.pi * eps) - 1e-9)))
    n_fast = 8
    while n_fast < points_per_wavelength * m:
        n_fast *= 2
    fast = FourierGrid.for_carrier(k0, m, n_fast)
    n_slow = min(n_fast, max(slow_min_modes, n_fast // 8))
    slow = FourierGrid(n_slow, eps * fast.length)
    return fast, slow


def apply_band_cutoff(d, k0, delta, max_band=2):
    """
    Zero every coefficient outside the bands |k - j k0| <= delta,
    |j| <= max_band.
    """
    if not delta < k0 / 2:
        raise PreconditionError("cutoff width {} must be below k0/2 = {}".format(delta, k0 / 2))
    mask = band_cutoff_symbol(k0, delta, max_band).on(d.grid) > 0
    return DiagonalState(d.um1_hat.masked(mask), d.up1_hat.masked(mask), d.t)


def _real_field(values, grid):
    return transform(RealField(np.real(values), grid)).projected()


class AnsatzBundle():
    """
    Wave-packet approximation of a given order built on an NLS envelope.
    """

    def __init__(self, order, eps, coeffs, envelope, fast, slow=None, cutoff_delta=None, cutoff=None,
                 max_band=2):
        """
        @param order
        FIRST (carrier only) or SECOND (plus second harmonic and mean flow).

        @param eps
        Amplitude parameter in (0, 0.5).

        @param coeffs
        CoefficientSet. Its nu2 also defines the envelope time derivative.

        @param envelope
        Envelope solving the NLS equation; it must be at T = eps**2 t when
        the ansatz is evaluated at t.

        @param fast
        Fast FourierGrid, period L with eps L equal to the slow period.

        @param slow
        Slow grid; defaults to the envelope grid.

        @param cutoff_delta
        Half width of the Fourier bands kept around j k0, default k0/4.

        @param cutoff
        Whether to apply the band cutoff. Defaults to True for SECOND and
        False for FIRST.

        @param max_band
        Highest harmonic band retained by the cutoff.
        """
        if order not in (FIRST, SECOND):
            raise PreconditionError("order must be '{}' or '{}', got {!r}".format(FIRST, SECOND, order))
        if not 0 < eps < 0.5:
            raise PreconditionError("eps must lie in (0, 0.5), got {}".format(eps))
        k0 = coeffs.carrier.k0
        if cutoff_delta is None:
            cutoff_delta = k0 / 4
        if not 0 < cutoff_delta < k0 / 2:
            raise PreconditionError("cutoff width {} must lie in (0, k0/2 = {})".format(cutoff_delta, k0 / 2))
        self.order = order
        self.eps = float(eps)
        self.coeffs = coeffs
        self.envelope = envelope
        self.fast = fast
        self.slow = envelope.grid if slow is None else slow
        self.cutoff_delta = float(cutoff_delta)
        self.cutoff = (order == SECOND) if cutoff is None else bool(cutoff)
        self.max_band = int(max_band)

    @property
    def params(self):
        return NlsParams.from_coefficients(self.coeffs)

    def with_envelope(self, envelope):
        return AnsatzBundle(self.order, self.eps, self.coeffs, envelope, self.fast, self.slow,
                            self.cutoff_delta, self.cutoff, self.max_band)

    def _slow_terms(self, nonlinearity):
        # slow coefficients of A, A**2, |A|**2 and of their X and T derivatives
        e = self.envelope
        grid = self.slow
        ik = 1j * grid.wavenumbers
        a = e.values()
        a_t = e.time_derivative(self.params, nonlinearity)
        terms = {}
        for name, f, f_t in (("A", a, a_t),
                             ("A2", a * a, 2 * a * a_t),
                             ("M", np.abs(a) ** 2 + 0j, 2 * np.real(np.conj(a) * a_t) + 0j)):
            f_hat = complex_transform(f, grid)
            terms[name] = (f_hat, ik * f_hat, complex_transform(f_t, grid))
        return terms

    def _on_fast(self, coeffs, t):
        return shifted_on_fast_grid(coeffs, self.slow, self.fast, self.eps, self.coeffs.carrier.cg, t)

    def _fields(self, t, rate=False, nonlinearity=True, second=None):
        """
        Physical samples of the two slots, or of their time derivatives
        when rate is True.
        """
        # raises StaleEnvelopeError if the envelope is not at eps**2 t
        evaluate_on_fast_grid(self.envelope, self.fast, self.eps, self.coeffs.carrier.cg, t)
        if second is None:
            second = self.order == SECOND
        eps = self.eps
        c = self.coeffs
        cg = c.carrier.cg
        omega0 = c.carrier.omega0
        x = self.fast.x
        carrier_wave = np.exp(1j * (c.carrier.k0 * x - omega0 * t))
        terms = self._slow_terms(nonlinearity)

        def modulated(name, j):
            f_hat, f_x, f_t = terms[name]
            f = self._on_fast(f_hat, t)
            if not rate:
                return f
            return (-eps * cg * self._on_fast(f_x, t) + eps * eps * self._on_fast(f_t, t)
                    - 1j * j * omega0 * f)

        um1 = 2 * np.real(eps * modulated("A", 1) * carrier_wave)
        up1 = np.zeros(self.fast.n)
        if second:
            harmonic = modulated("A2", 2) * carrier_wave ** 2
            mean = np.real(modulated("M", 0))
            um1 = um1 + eps ** 2 * (2 * np.real(c.a21 * harmonic) + c.a01 * mean)
            up1 = up1 + eps ** 2 * (2 * np.real(c.a22 * harmonic) + c.a02 * mean)
        return um1, up1

    def _assemble(self, fields, t):
        d = DiagonalState(_real_field(fields[0], self.fast), _real_field(fields[1], self.fast), t)
        if self.cutoff:
            d = apply_band_cutoff(d, self.coeffs.carrier.k0, self.cutoff_delta, self.max_band)
        return d

    def state(self, t=0.0):
        """
        The ansatz at time t as a DiagonalState.
        """
        return self._assemble(self._fields(t), t)

    def time_derivative(self, t=0.0, nonlinearity=True):
        """
        Analytic time derivative of the ansatz: carrier phases give
        -i j omega0, the slow argument gives -eps cg d_X and d_T A is
        taken from the envelope equation.
        """
        return self._assemble(self._fields(t, rate=True, nonlinearity=nonlinearity), t)


def build_ansatz(order, eps, envelope, coeffs, fast, t=0.0, slow=None, cutoff_delta=None, cutoff=None,
                 max_band=2):
    """
    Evaluate the ansatz of the given order at time t.
    """
    bundle = AnsatzBundle(order, eps, coeffs, envelope, fast, slow, cutoff_delta, cutoff, max_band)
    return bundle.state(t)


@dataclass
class ResidualPair():
    res_m1: SpectralField
    res_p1: SpectralField
    t: float

    def sobolev_norm(self, s):
        return math.hypot(sobolev_norm(self.res_m1, s), sobolev_norm(self.res_p1, s))


def compute_residual(bundle, t=0.0, nonlinearity=True):
    """
    Res = -d/dt Psi + rhs(Psi) for the (cut) ansatz Psi. The cutoff commutes
    with d/dt, so the cut derivative is used.
    """
    psi = bundle.state(t)
    rate = bundle.time_derivative(t, nonlinearity)
    rhs_m1, rhs_p1 = rhs_diagonal(psi, nonlinearity)
    return ResidualPair(res_m1=rhs_m1 - rate.um1_hat, res_p1=rhs_p1 - rate.up1_hat, t=t)


def harmonic_bands(grid, k0, band):
    """
    Mask of the wavenumbers nearest to the harmonic +-band k0.
    """
    return np.rint(np.abs(grid.wavenumbers) / k0).astype(int) == band


def band_residual_norms(res, k0, s=6, bands=(0, 1, 2, 3, 4)):
    """
    H^s norms of the residual restricted to the wavenumbers nearest to each
    harmonic, keyed by (slot, band) with slot 'um1' or 'up1'.
    """
    norms = {}
    for slot, field in (("um1", res.res_m1), ("up1", res.res_p1)):
        for band in bands:
            norms[(slot, band)] = sobolev_norm(field.masked(harmonic_bands(field.grid, k0, band)), s)
    return norms


def psi_time_derivative_check(bundle, t=0.0, s=6):
    """
    L1(s) norm of d/dt psi + i omega psi for the carrier part
    psi = chi (A E + c.c.) restricted to the bands around +-k0.
    """
    grid = bundle.fast
    eps = bundle.eps
    psi = _real_field(bundle._fields(t, second=False)[0], grid) / eps
    rate = _real_field(bundle._fields(t, rate=True, second=False)[0], grid) / eps
    mismatch = rate + SpectralField(1j * omega(grid.wavenumbers) * psi.coeffs, grid)
    k0 = bundle.coeffs.carrier.k0
    mask = np.abs(np.abs(grid.wavenumbers) - k0) <= bundle.cutoff_delta
    return weighted_l1_norm(mismatch.masked(mask), s)


@dataclass
class BandCertificate():
    """
    Residual scaling of one band with certified and reference coefficients.
    """
    band: int
    slot: str
    reference: str
    eps: list
    certified: list
    perturbed: list
    certified_slope: float
    perturbed_slope: float
    passed: bool


def _band_value(norms, slot, band):
    if slot == "both":
        return math.hypot(norms[("um1", band)], norms[("up1", band)])
    return norms[(slot, band)]


def certify_coefficients(coeffs, eps_list=(0.1, 0.05, 0.025), s=6, envelope_kind="sech",
                         points_per_wavelength=16, slow_min_modes=256, min_gain=0.9):
    """
    Residual band oracle. For each targeted band the uncut second-order
    residual at t = 0 is computed with the derived coefficients and with a
    reference set, and the log-log slopes in eps are compared. The derived
    coefficients pass if they gain at least min_gain powers of eps.

      band 2: reference a21 = a22 = 0
      band 1: reference nu2 = 0 (u_{-1} slot; u_1 carries an uncancelled
              eps**3 term at E**1 by construction)
      band 0: reference a01 = a02 = 1
    """
    checks = (
        (2, "both", "a21=a22=0", coeffs.replace(a21=0.0, a22=0.0)),
        (1, "um1", "nu2=0", coeffs.replace(nu2=0.0)),
        (0, "both", "a01=a02=1", coeffs.replace(a01=1.0, a02=1.0)),
    )
    values = {band: ([], []) for band, _, _, _ in checks}
    k0 = coeffs.carrier.k0
    for eps in eps_list:
        fast, slow = build_grids(eps, k0, points_per_wavelength=points_per_wavelength,
                                 slow_min_modes=slow_min_modes)
        envelope = initial_envelope(envelope_kind, slow, NlsParams.from_coefficients(coeffs))
        norms = band_residual_norms(
            compute_residual(AnsatzBundle(SECOND, eps, coeffs, envelope, fast, cutoff=False)), k0, s)
        for band, slot, _, reference in checks:
            ref_norms = band_residual_norms(
                compute_residual(AnsatzBundle(SECOND, eps, reference, envelope, fast, cutoff=False)), k0, s)
            values[band][0].append(_band_value(norms, slot, band))
            values[band][1].append(_band_value(ref_norms, slot, band))

    log_eps = np.log(np.asarray(eps_list, dtype=float))
    certificates = []
    for band, slot, label, _ in checks:
        certified, perturbed = values[band]
        slope_c = float(np.polyfit(log_eps, np.log(certified), 1)[0])
        slope_p = float(np.polyfit(log_eps, np.log(perturbed), 1)[0])
        passed = slope_c >= slope_p + min_gain
        logger.info("band E^%d (%s): slope %.3f vs %.3f with %s -> %s", band, slot, slope_c, slope_p, label,
                    "pass" if passed else "FAIL")
        certificates.append(BandCertificate(band=band, slot=slot, reference=label, eps=list(eps_list),
                                            certified=certified, perturbed=perturbed,
                                            certified_slope=slope_c, perturbed_slope=slope_p, passed=passed))
    return certificates


@dataclass
class Nu2Scan():
    nu2: float
    samples: list
    eps: float


def scan_nu2(coeffs, eps=0.025, s=0, bracket=(-3.0, 3.0), points=13, envelope_kind="sech",
             points_per_wavelength=16, slow_min_modes=256):
    """
    Find the nu2 minimizing the u_{-1} residual in the band around k0.

    The residual is affine in nu2, so its squared norm is a parabola whose
    vertex is computed from the values at nu2 = 0 and nu2 = 1. The norms on
    a uniform grid over the bracket are returned as samples.
    """
    k0 = coeffs.carrier.k0
    fast, slow = build_grids(eps, k0, points_per_wavelength=points_per_wavelength,
                             slow_min_modes=slow_min_modes)
    envelope = initial_envelope(envelope_kind, slow, NlsParams.from_coefficients(coeffs))
    mask = harmonic_bands(fast, k0, 1)
    weight = (1.0 + fast.wavenumbers ** 2) ** s

    def band_residual(nu2):
        res = compute_residual(AnsatzBundle(SECOND, eps, coeffs.replace(nu2=nu2), envelope, fast,
                                            cutoff=False))
        return np.where(mask, res.res_m1.coeffs, 0.0)

    r0 = band_residual(0.0)
    slope = band_residual(1.0) - r0
    curvature = np.sum(weight * np.abs(slope) ** 2)
    if curvature == 0:
        raise ResonanceError("residual does not depend on nu2")
    nu2 = float(-np.real(np.sum(weight * r0 * np.conj(slope))) / curvature)

    samples = []
    for value in np.linspace(bracket[0], bracket[1], points):
        r = r0 + value * slope
        samples.append((float(value), float(np.sqrt(fast.length * np.sum(weight * np.abs(r) ** 2)))))
    logger.info("nu2 scan at eps=%g: minimizer %.8f", eps, nu2)
    return Nu2Scan(nu2=nu2, samples=samples, eps=eps)
