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
Error decomposition, the normal-form bilinear operators N, G, S, the energy
E_s and the modified energy of the error equations.

The solution is split as (u_{-1}, u_1) = eps Psi + eps**(5/2) (R_{-1}, R_1).
With psi = (Psi_{-1} + Psi_1) the bilinear operators act by direct sums
over the (compact) Fourier support of psi, in the coefficient convention
of the spectral module:

    N_{j1 j2}(psi, f)(k) = sum_p n_{j1 j2}(k, p, k - p) psi(p) f(k - p)

    n_{j1 j2}(k, p, m) = -j1 rho(k) / (-j1 omega(k) - omega(p) + j2 omega(m))
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import omega, rho, rho_quotient
from .errors import GridMismatchError, PreconditionError, ResonanceError
from .spectral import (SpectralField, dealiased_product, derivative,
                       inner_product, physical, quadrature, sobolev_norm)

logger = logging.getLogger(__name__)

DENOMINATOR_GUARD = 1e-6


@dataclass
class ErrorPair():
    r_m1: SpectralField
    r_p1: SpectralField
    eps: float
    t: float

    @property
    def total(self):
        return self.r_m1 + self.r_p1


def extract_error(sim, ansatz, eps):
    """
    R_j = eps**(-5/2) (u_j - eps Psi_j), where `ansatz` already holds eps Psi.
    """
    sim.grid.check_same(ansatz.grid, "simulation and ansatz")
    if abs(sim.t - ansatz.t) > 1e-9 * max(1.0, abs(sim.t)):
        raise GridMismatchError("simulation at t={} but ansatz at t={}".format(sim.t, ansatz.t))
    scale = eps ** -2.5
    return ErrorPair(r_m1=(sim.um1_hat - ansatz.um1_hat) * scale,
                     r_p1=(sim.up1_hat - ansatz.up1_hat) * scale, eps=eps, t=sim.t)


class PsiData():
    """
    The combined carrier field psi and the indicator chi of its Fourier
    support.
    """

    def __init__(self, psi_hat):
        self.psi_hat = psi_hat
        self.grid = psi_hat.grid
        self.chi_mask = psi_hat.coeffs != 0
        self.chi_mask.setflags(write=False)

    @classmethod
    def from_ansatz(cls, ansatz, eps):
        """
        @param ansatz
        DiagonalState holding eps Psi.
        """
        return cls((ansatz.um1_hat + ansatz.up1_hat) / eps)

    @property
    def support(self):
        """
        Signed mode indices of supp psi in ascending order.
        """
        return np.sort(self.grid.index[self.chi_mask])

    @property
    def k1(self):
        if not np.any(self.chi_mask):
            return 0.0
        return float(np.max(np.abs(self.grid.wavenumbers[self.chi_mask])))


def kernel_n(k, p, m, j1, j2, chi=1.0):
    """
    Normal-form kernel n_{j1 j2}(k, p, m), m = k - p.
    """
    den = -j1 * omega(k) - omega(p) + j2 * omega(m)
    _guard(den)
    return -j1 * rho(k) * chi / den


def kernel_s(k, p, m, j2, j1, chi=1.0):
    """
    Kernel s_{j2 j1}(k, p, m) of the adjoint correction S. The removable
    factor (rho(k) - rho(m)) / (k - m) is replaced by rho'(m) on the
    diagonal.
    """
    den = -j2 * omega(k) - omega(p) + j1 * omega(m)
    _guard(den)
    return -j1 * rho_quotient(k, m) * chi / (1j * den)


def _guard(den):
    smallest = float(np.min(np.abs(den))) if np.size(den) else np.inf
    if smallest < DENOMINATOR_GUARD:
        raise ResonanceError("normal-form denominator {:.3e} below guard {:.0e}".format(smallest, DENOMINATOR_GUARD))


def _bilinear(psi_coeffs, support, f, kernel):
    """
    sum over q in support of kernel(k, p_q, k - p_q) psi(q) f(k - q), with
    contributions leaving the grid dropped.
    """
    grid = f.grid
    n = grid.n
    kc = grid.centered_wavenumbers
    f_c = np.fft.fftshift(f.coeffs)
    out_c = np.zeros(n, dtype=complex)
    for q in support:
        lo = max(0, -q)
        hi = min(n, n - q)
        if hi <= lo:
            continue
        target = slice(lo + q, hi + q)
        source = slice(lo, hi)
        weight = kernel(kc[target], grid.wavenumbers[q % n], kc[source])
        out_c[target] += weight * psi_coeffs[q % n] * f_c[source]
    return SpectralField(np.fft.ifftshift(out_c), grid)


def apply_N(psi, f, j1, j2, psi_hat=None):
    """
    N_{j1 j2}(psi, f).

    @param psi
    PsiData; its support defines chi.

    @param psi_hat
    Optional field replacing psi in the sum while keeping chi, used for
    N(i omega psi, f).
    """
    psi.grid.check_same(f.grid)
    coeffs = (psi.psi_hat if psi_hat is None else psi_hat).coeffs
    return _bilinear(coeffs, psi.support, f, lambda k, p, m: kernel_n(k, p, m, j1, j2))


def apply_G(h, j1, j2, chi_mask=None):
    """
    Multiplier G_{jj} = chi / (-i (omega + j k)) or G_{j,-j} = chi / 2.
    """
    if chi_mask is None:
        chi_mask = h.coeffs != 0
    k = h.grid.wavenumbers
    if j1 == j2:
        symbol = 1.0 / (-1j * (omega(k) + j1 * k))
    else:
        symbol = np.full(k.shape, 0.5)
    return SpectralField(np.where(chi_mask, symbol * h.coeffs, 0.0), h.grid)


def apply_S(dh, f, j2, j1, chi_mask=None):
    """
    S_{j2 j1}(d_x h, f) for the derivative dh of the carrier field. chi is
    the support of h, default the support of dh.
    """
    dh.grid.check_same(f.grid)
    if chi_mask is None:
        chi_mask = dh.coeffs != 0
    support = np.sort(dh.grid.index[chi_mask])
    return _bilinear(dh.coeffs, support, f, lambda k, p, m: kernel_s(k, p, m, j2, j1))


def _relative(discrepancy, *terms):
    scale = sum(terms)
    if scale == 0:
        return 0.0
    return float(discrepancy / scale)


def _times_i_omega(f):
    return SpectralField(1j * omega(f.grid.wavenumbers) * f.coeffs, f.grid)


def check_normal_form_identity(psi, f, j1, j2):
    """
    Relative L2 discrepancy of

        -j1 i omega N(psi, f) - N(i omega psi, f) + j2 N(psi, i omega f)
            = -j1 i rho (psi f).
    """
    t1 = _times_i_omega(apply_N(psi, f, j1, j2)) * -j1
    t2 = -apply_N(psi, f, j1, j2, psi_hat=_times_i_omega(psi.psi_hat))
    t3 = apply_N(psi, _times_i_omega(f), j1, j2) * j2
    product = dealiased_product(psi.psi_hat, f)
    rhs = SpectralField(-j1 * 1j * rho(f.grid.wavenumbers) * product.coeffs, f.grid)
    return _relative(sobolev_norm(t1 + t2 + t3 - rhs, 0),
                     *(sobolev_norm(x, 0) for x in (t1, t2, t3, rhs)))


def check_adjoint_identity(psi, f, g, j1, j2):
    """
    Relative discrepancy of

        int f N_{j1 j2}(h, g) = -(j1/j2) int N_{j2 j1}(h, f) g + int S_{j2 j1}(d_x h, f) g

    with h = psi.
    """
    lhs = inner_product(f, apply_N(psi, g, j1, j2))
    r1 = -(j1 / j2) * inner_product(apply_N(psi, f, j2, j1), g)
    r2 = inner_product(apply_S(derivative(psi.psi_hat), f, j2, j1, psi.chi_mask), g)
    return _relative(abs(lhs - r1 - r2), abs(lhs), abs(r1), abs(r2))


def check_splitting(psi, f, j1, j2):
    """
    Empirical constant ||Q_{j1 j2}(psi, f)||_{L2} / (||psi||_{L2} ||f||_{L2})
    of the splittings

        N_{jj}(h, f)  = -j d_x(G_{jj} h f) + Q_{jj}(h, f)
        N_{j,-j}(h, f) = G_{j,-j} h f + Q_{j,-j}(h, f).
    """
    g = dealiased_product(apply_G(psi.psi_hat, j1, j2, psi.chi_mask), f)
    n = apply_N(psi, f, j1, j2)
    if j1 == j2:
        q = n + derivative(g) * j1
    else:
        q = n - g
    scale = sobolev_norm(psi.psi_hat, 0) * sobolev_norm(f, 0)
    return _relative(sobolev_norm(q, 0), scale)


def _samples(F, order=0):
    return np.real(physical(derivative(F, order) if order else F))


def parts_terms(a_pair, f_pair):
    """
    Integrals entering the partial integration identities, for
    a_pair = (a_{-1}, a_1) and f_pair = (f_{-1}, f_1):

      'dx1'        int a_j f_j f_j' and -1/2 int a_j' f_j**2 per j
      'sum'        sum_j int a_j f_j d_x f_{-j}
      'leading'    1/2 int (a_{-1} - a_1)(f_1 + f_{-1}) d_x(f_1 - f_{-1})
      'remainder'  -1/2 int (a_1' + a_{-1}') f_1 f_{-1}
                   + 1/4 int (a_{-1} - a_1)' (f_1**2 - f_{-1}**2)

    'sum' equals 'leading' + 'remainder' exactly.
    """
    grid = a_pair[0].grid
    am, ap = (_samples(a) for a in a_pair)
    dam, dap = (_samples(a, 1) for a in a_pair)
    fm, fp = (_samples(f) for f in f_pair)
    dfm, dfp = (_samples(f, 1) for f in f_pair)

    dx1 = [(quadrature(a, f, df, grid=grid), -0.5 * quadrature(da, f, f, grid=grid))
           for a, da, f, df in ((am, dam, fm, dfm), (ap, dap, fp, dfp))]
    total = quadrature(ap, fp, dfm, grid=grid) + quadrature(am, fm, dfp, grid=grid)
    leading = 0.5 * quadrature(am - ap, fp + fm, dfp - dfm, grid=grid)
    remainder = (-0.5 * quadrature(dap + dam, fp, fm, grid=grid)
                 + 0.25 * quadrature(dam - dap, fp * fp - fm * fm, grid=grid))
    return {"dx1": dx1, "sum": total, "leading": leading, "remainder": remainder}


def check_parts_identities(a_pair, f_pair):
    """
    Relative discrepancies of the two partial integration identities:
    int a f f' = -1/2 int a' f**2 (both j), and the rearrangement of
    sum_j int a_j f_j d_x f_{-j} into its leading term plus the explicit
    remainder.
    """
    terms = parts_terms(a_pair, f_pair)
    d50 = _relative(sum(abs(l - r) for l, r in terms["dx1"]), *(abs(l) + abs(r) for l, r in terms["dx1"]))
    d51 = _relative(abs(terms["sum"] - terms["leading"] - terms["remainder"]),
                    abs(terms["sum"]), abs(terms["leading"]), abs(terms["remainder"]))
    return d50, d51


def derivative_norm(F, s):
    """
    (sum_{l=0}^{s} ||d_x^l F||_{L2}**2)**(1/2), the norm the energy is built on.
    """
    k2 = F.grid.wavenumbers ** 2
    weight = sum(k2 ** ell for ell in range(s + 1))
    return float(np.sqrt(F.grid.length * np.sum(weight * np.abs(F.coeffs) ** 2)))


@dataclass
class EnergyBreakdown():
    e_ell: list
    h_ell: list
    e_total: float
    e_modified: float
    s: int
    eps: float = 0.0


def energy(err, psi, s=6):
    """
    E_s = sum_{l=0}^{s} E_l and the modified energy
    E_s + eps**2/2 sum_{l=1}^{s} h_l, with

      E_l = sum_{j1} ( 1/2 int (d^l R_{j1})**2
                       + eps sum_{j2} int d^l R_{j1} d^l N_{j1 j2}(psi, R_{j2}) )

      h_l = int ( ((2l+1) psi_xx - psi)(psi + eps**(3/2) S) + eps**(1/2) S ) (d^l S)**2,
      S = R_1 + R_{-1}.
    """
    if s < 0:
        raise PreconditionError("energy index s must be >= 0, got {}".format(s))
    eps = err.eps
    grid = err.r_m1.grid
    psi.grid.check_same(grid, "error and carrier field")
    L = grid.length
    k2 = grid.wavenumbers ** 2
    r = {-1: err.r_m1.coeffs, 1: err.r_p1.coeffs}
    fields = {-1: err.r_m1, 1: err.r_p1}

    corrections = {}
    if eps != 0:
        for j1 in (-1, 1):
            for j2 in (-1, 1):
                corrections[(j1, j2)] = apply_N(psi, fields[j2], j1, j2).coeffs

    e_ell = []
    for ell in range(s + 1):
        w = k2 ** ell
        e = 0.0
        for j1 in (-1, 1):
            e += 0.5 * L * float(np.sum(w * np.abs(r[j1]) ** 2))
            for j2 in (-1, 1):
                if (j1, j2) in corrections:
                    e += eps * L * float(np.real(np.sum(w * r[j1] * np.conj(corrections[(j1, j2)]))))
        e_ell.append(e)

    h_ell = []
    total = err.total
    if s >= 1:
        psi_v = _samples(psi.psi_hat)
        psi_xx = _samples(psi.psi_hat, 2)
        s_v = _samples(total)
        for ell in range(1, s + 1):
            d_ell = _samples(total, ell)
            factor = ((2 * ell + 1) * psi_xx - psi_v) * (psi_v + eps ** 1.5 * s_v) + eps ** 0.5 * s_v
            h_ell.append(quadrature(factor, d_ell, d_ell, grid=grid))

    e_total = float(sum(e_ell))
    return EnergyBreakdown(e_ell=e_ell, h_ell=h_ell, e_total=e_total,
                           e_modified=e_total + 0.5 * eps ** 2 * float(sum(h_ell)), s=s, eps=eps)


def equivalence_ratios(breakdown, err):
    """
    sqrt(E_s) / (|R_1| + |R_{-1}|) in the derivative norm and in H^s.
    """
    s = breakdown.s
    root = math.sqrt(max(breakdown.e_total, 0.0))
    by_derivatives = derivative_norm(err.r_p1, s) + derivative_norm(err.r_m1, s)
    by_sobolev = sobolev_norm(err.r_p1, s) + sobolev_norm(err.r_m1, s)
    return (root / by_derivatives if by_derivatives else 0.0,
            root / by_sobolev if by_sobolev else 0.0)


@dataclass
class EnergyTrace():
    eps: float
    s: int
    times: list = field(default_factory=list)
    e_total: list = field(default_factory=list)
    e_modified: list = field(default_factory=list)
    rate: list = field(default_factory=list)
    ratio: list = field(default_factory=list)

    @property
    def sup_e_modified(self):
        return max(self.e_modified) if self.e_modified else 0.0

    @property
    def sup_ratio(self):
        return max((abs(r) for r in self.ratio), default=0.0)

    @property
    def coercive(self):
        """
        Whether E_s and E~_s stayed non-negative along the trace.
        """
        return all(e >= 0 for e in self.e_total + self.e_modified)

    def gronwall_bounded(self, factor):
        """
        sup E~_s <= factor (E~_s(0) + 1) on a coercive trace.
        """
        if not self.e_modified or not self.coercive:
            return False
        return self.sup_e_modified <= factor * (self.e_modified[0] + 1.0)

    @property
    def gap_constant(self):
        """
        max_t |E~_s - E_s| / eps**2.
        """
        if not self.times:
            return 0.0
        return max(abs(m - e) for m, e in zip(self.e_modified, self.e_total)) / self.eps ** 2

    def rows(self):
        return [{"t": t, "E_s": e, "E_mod": m, "dE_mod_dt": d, "ratio": r}
                for t, e, m, d, r in zip(self.times, self.e_total, self.e_modified, self.rate, self.ratio)]


def energy_trace(trajectory, ansatz_provider, eps, s=6):
    """
    Energies along a trajectory and the ratio

        (d/dt E~_s) / (eps**2 (E~_s + eps**(1/2) E~_s**(3/2) + 1))

    with the rate from centered differences (one-sided at the ends).

    @param trajectory
    Iterable of simulated DiagonalStates.

    @param ansatz_provider
    Callable t -> DiagonalState holding eps Psi at time t.
    """
    trace = EnergyTrace(eps=eps, s=s)
    for sim in trajectory:
        ansatz = ansatz_provider(sim.t)
        breakdown = energy(extract_error(sim, ansatz, eps), PsiData.from_ansatz(ansatz, eps), s)
        trace.times.append(sim.t)
        trace.e_total.append(breakdown.e_total)
        trace.e_modified.append(breakdown.e_modified)
        logger.debug("t=%.4g E_s=%.6g E_mod=%.6g", sim.t, breakdown.e_total, breakdown.e_modified)

    if len(trace.times) >= 2:
        rate = np.gradient(np.asarray(trace.e_modified), np.asarray(trace.times))
    else:
        rate = np.zeros(len(trace.times))
    for d, m in zip(rate, trace.e_modified):
        trace.rate.append(float(d))
        trace.ratio.append(growth_ratio(d, m, eps))
    if not trace.coercive:
        logger.warning("energy turned negative: min E_s=%.4g, min E_mod=%.4g",
                       min(trace.e_total), min(trace.e_modified))
    return trace


def growth_ratio(rate, e_modified, eps):
    """
    rate / (eps**2 (E~ + eps**(1/2) E~**(3/2) + 1)), NaN for E~ < 0 where
    the bound is undefined.
    """
    if e_modified < 0:
        return math.nan
    return float(rate / (eps ** 2 * (e_modified + eps ** 0.5 * e_modified ** 1.5 + 1.0)))
