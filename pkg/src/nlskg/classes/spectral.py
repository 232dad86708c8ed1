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
Periodic spectral discretization.

Collocation points are x_j = -L/2 + j L/n and a real field is stored by its
coefficients c_j in u(x) = sum_j c_j exp(i k_j x), k_j = 2 pi j / L, in the
order of numpy.fft (j = 0, 1, ..., n/2-1, -n/2, ..., -1). Because of the
-L/2 origin, c_j = (-1)**j fft(u)_j / n.

Norm conventions:

  sobolev_norm(F, s)      = sqrt(L sum_j (1 + k_j**2)**s |c_j|**2)
  weighted_l1_norm(F, s)  = sum_j (1 + k_j**2)**(s/2) |c_j|

The second one is the L1(s) norm of the coefficient density |c_j| L/(2 pi)
integrated with dk = 2 pi / L. With these conventions
sobolev_norm(psi f, s) <= 2**(s/2) weighted_l1_norm(psi, s) sobolev_norm(f, s).
"""

import numpy as np

from .dispersion import omega, rho, sign
from .errors import (GridMismatchError, InvalidFieldError, PreconditionError,
                     SymmetryError)

HERMITIAN_TOL = 1e-12


class FourierGrid():
    """
    Uniform periodic grid of n points on [-L/2, L/2).
    """

    def __init__(self, n, length, k0=None, wavelengths=None):
        """
        @param n
        Even number of collocation points, at least 8.

        @param length
        Period L > 0.

        @param k0
        Optional carrier wavenumber. Together with `wavelengths` = m it
        declares L = 2 pi m / k0 and makes every multiple of k0 an exact
        grid wavenumber. Use FourierGrid.for_carrier() instead of passing
        these directly.
        """
        if n < 8 or n % 2:
            raise PreconditionError("grid size must be even and >= 8, got {}".format(n))
        if not length > 0:
            raise PreconditionError("grid length must be positive, got {}".format(length))

        self.n = int(n)
        self.length = float(length)
        self.k0 = k0
        self.wavelengths = wavelengths

        self.index = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
        if k0 is None:
            self.wavenumbers = 2 * np.pi * self.index / self.length
        else:
            self.wavenumbers = self.index * k0 / wavelengths
            on_harmonic = self.index % wavelengths == 0
            self.wavenumbers[on_harmonic] = (self.index[on_harmonic] // wavelengths) * k0
        self.wavenumbers.setflags(write=False)
        self.x = -self.length / 2 + np.arange(self.n) * self.length / self.n
        self.x.setflags(write=False)

        # exp(-i k_j L/2) = (-1)**j
        self.phase = np.where(self.index % 2 == 0, 1.0, -1.0)
        self.nyquist = self.n // 2
        self.dealias_mask = 3 * np.abs(self.index) < self.n

        # centered ordering used by the direct bilinear sums
        self.centered_wavenumbers = np.fft.fftshift(self.wavenumbers)

    @classmethod
    def for_carrier(cls, k0, wavelengths, n):
        """
        Grid of period L = 2 pi m / k0 on which the carrier k0 sits at
        index m bit-exactly.
        """
        if wavelengths < 1:
            raise PreconditionError("need at least one carrier wavelength, got {}".format(wavelengths))
        return cls(n, 2 * np.pi * wavelengths / k0, k0=float(k0), wavelengths=int(wavelengths))

    @property
    def dk(self):
        return 2 * np.pi / self.length

    def position(self, j):
        """
        Storage position of signed mode index j.
        """
        return int(j) % self.n

    def same_as(self, other):
        return self.n == other.n and self.length == other.length

    def check_same(self, other, what="operands"):
        if not self.same_as(other):
            raise GridMismatchError("{} live on different grids: (n={}, L={}) vs (n={}, L={})".format(
                what, self.n, self.length, other.n, other.length))

    def __repr__(self):
        return "FourierGrid(n={}, length={:.12g})".format(self.n, self.length)


def _frozen(values, dtype):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class RealField():
    """
    Real values at the collocation points of a grid.
    """

    def __init__(self, values, grid):
        values = _frozen(values, float)
        if values.shape != (grid.n,):
            raise GridMismatchError("expected {} values, got shape {}".format(grid.n, values.shape))
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("field contains non-finite values")
        self.values = values
        self.grid = grid


class SpectralField():
    """
    Fourier coefficients c_j of a field on a grid.

    Real fields are Hermitian-symmetric, c_{-j} = conj(c_j). Intermediate
    quantities such as time derivatives or bilinear outputs are stored in
    the same type; symmetry is enforced where a real field is required
    (inverse_transform).
    """

    def __init__(self, coeffs, grid):
        coeffs = _frozen(coeffs, complex)
        if coeffs.shape != (grid.n,):
            raise GridMismatchError("expected {} coefficients, got shape {}".format(grid.n, coeffs.shape))
        if not np.all(np.isfinite(coeffs)):
            raise InvalidFieldError("spectral field contains non-finite coefficients")
        self.coeffs = coeffs
        self.grid = grid

    @classmethod
    def zeros(cls, grid):
        return cls(np.zeros(grid.n, dtype=complex), grid)

    @property
    def mean(self):
        return self.coeffs[0]

    def mirrored(self):
        """
        Coefficients at -k_j, i.e. c[(-j) mod n].
        """
        return np.roll(self.coeffs[::-1], 1)

    def hermitian_defect(self):
        c = self.coeffs
        scale = np.max(np.abs(c))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(c - np.conj(self.mirrored()))) / scale)

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return self.hermitian_defect() <= tol

    def check_hermitian(self, tol=HERMITIAN_TOL):
        defect = self.hermitian_defect()
        if defect > tol:
            raise SymmetryError("coefficients are not Hermitian: relative defect {:.3e} > {:.1e}".format(defect, tol))

    def projected(self):
        """
        Copy with the mean and the unpaired Nyquist coefficient removed.
        """
        c = np.array(self.coeffs)
        c[0] = 0.0
        c[self.grid.nyquist] = 0.0
        return SpectralField(c, self.grid)

    def masked(self, mask):
        return SpectralField(np.where(mask, self.coeffs, 0.0), self.grid)

    def _other(self, other):
        if isinstance(other, SpectralField):
            self.grid.check_same(other.grid)
            return other.coeffs
        return other

    def __add__(self, other):
        return SpectralField(self.coeffs + self._other(other), self.grid)

    def __sub__(self, other):
        return SpectralField(self.coeffs - self._other(other), self.grid)

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * scalar, self.grid)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.coeffs / scalar, self.grid)

    def __neg__(self):
        return SpectralField(-self.coeffs, self.grid)

    def __repr__(self):
        return "SpectralField({!r}, max|c|={:.3e})".format(self.grid, float(np.max(np.abs(self.coeffs))))


class Symbol():
    """
    A Fourier multiplier given by its symbol s(k).
    """

    def __init__(self, name, evaluator):
        """
        @param name
        Identifier used in logs and error messages.

        @param evaluator
        Function mapping an array of wavenumbers to an array of real or
        complex symbol values. It must be defined at k = 0.
        """
        self.name = name
        self.evaluator = evaluator

    def __call__(self, k):
        return self.evaluator(np.asarray(k, dtype=float))

    def on(self, grid):
        return np.asarray(self.evaluator(grid.wavenumbers))

    def __mul__(self, other):
        return Symbol("{}*{}".format(self.name, other.name), lambda k: self.evaluator(k) * other.evaluator(k))

    def __repr__(self):
        return "Symbol({})".format(self.name)


def omega_symbol():
    return Symbol("omega", omega)


def rho_symbol():
    return Symbol("rho", rho)


def hilbert_symbol():
    return Symbol("hilbert", lambda k: -1j * sign(k))


def bessel_symbol():
    return Symbol("sqrt(1+k^2)", lambda k: np.sqrt(1.0 + k * k))


def derivative_symbol(order=1):
    return Symbol("d^{}".format(order), lambda k: (1j * k) ** order)


def band_cutoff_symbol(k0, delta, max_band):
    """
    Indicator of the union of [j k0 - delta, j k0 + delta], |j| <= max_band.
    """
    def evaluator(k):
        inside = np.zeros(np.shape(k), dtype=bool)
        for j in range(-max_band, max_band + 1):
            inside |= np.abs(k - j * k0) <= delta
        return inside.astype(float)
    return Symbol("chi[{}, {}]".format(delta, max_band), evaluator)


def transform(f):
    """
    Spectral coefficients of a real field.
    """
    grid = f.grid
    return SpectralField(grid.phase * np.fft.fft(f.values) / grid.n, grid)


def inverse_transform(F, tol=HERMITIAN_TOL):
    """
    Real field of Hermitian coefficients.
    """
    F.check_hermitian(tol)
    grid = F.grid
    return RealField(np.real(grid.n * np.fft.ifft(grid.phase * F.coeffs)), grid)


def complex_transform(values, grid):
    """
    Coefficients of complex samples (no symmetry), as a plain array.
    """
    values = np.asarray(values, dtype=complex)
    if not np.all(np.isfinite(values)):
        raise InvalidFieldError("complex samples contain non-finite values")
    return grid.phase * np.fft.fft(values) / grid.n


def complex_inverse_transform(coeffs, grid):
    return grid.n * np.fft.ifft(grid.phase * np.asarray(coeffs, dtype=complex))


def physical(F):
    """
    Samples of F without the symmetry check (complex array).
    """
    return complex_inverse_transform(F.coeffs, F.grid)


def apply_multiplier(F, symbol):
    return SpectralField(F.coeffs * symbol.on(F.grid), F.grid)


def derivative(F, order=1):
    return SpectralField(F.coeffs * (1j * F.grid.wavenumbers) ** order, F.grid)


def dealiased_coeffs(a, b, grid):
    mask = grid.dealias_mask
    au = complex_inverse_transform(np.where(mask, a, 0.0), grid)
    bu = au if b is a else complex_inverse_transform(np.where(mask, b, 0.0), grid)
    return np.where(mask, grid.phase * np.fft.fft(au * bu) / grid.n, 0.0)


def dealiased_product(f, g):
    """
    Coefficients of f g by the 2/3 rule: modes with 3|j| >= n are removed
    from both factors and from the product.
    """
    f.grid.check_same(g.grid, "factors of a product")
    return SpectralField(dealiased_coeffs(f.coeffs, g.coeffs, f.grid), f.grid)


def _check_order(s):
    if s < 0:
        raise PreconditionError("Sobolev index must be non-negative, got {}".format(s))


def sobolev_norm(F, s):
    _check_order(s)
    k = F.grid.wavenumbers
    return float(np.sqrt(F.grid.length * np.sum((1.0 + k * k) ** s * np.abs(F.coeffs) ** 2)))


def weighted_l1_norm(F, s):
    _check_order(s)
    k = F.grid.wavenumbers
    return float(np.sum((1.0 + k * k) ** (s / 2.0) * np.abs(F.coeffs)))


def inner_product(f, g):
    """
    Integral of f g over one period for real fields f and g.
    """
    f.grid.check_same(g.grid)
    return float(f.grid.length * np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def quadrature(*values, grid):
    """
    Trapezoidal integral of the pointwise product of sample arrays.
    """
    prod = np.ones(grid.n)
    for v in values:
        prod = prod * v
    return float(grid.length / grid.n * np.sum(prod))


def random_band_limited(grid, rng, max_index, mask=None, decay=0.0, zero_mean=True):
    """
    Random real field with modes 0 < |j| <= max_index, optionally
    restricted to a symmetric mask and damped like (1 + k**2)**(-decay/2).
    The Nyquist coefficient is always zero.

    @param rng
    A numpy.random.Generator.
    """
    if max_index >= grid.n // 2:
        raise PreconditionError("band limit {} does not fit a grid of {} points".format(max_index, grid.n))
    coeffs = np.zeros(grid.n, dtype=complex)
    j = np.arange(1, max_index + 1)
    draw = rng.standard_normal(max_index) + 1j * rng.standard_normal(max_index)
    k = grid.wavenumbers[j]
    draw = draw * (1.0 + k * k) ** (-decay / 2.0)
    coeffs[j] = draw
    coeffs[-j] = np.conj(draw)
    if not zero_mean:
        coeffs[0] = rng.standard_normal()
    if mask is not None:
        coeffs = np.where(mask, coeffs, 0.0)
    return SpectralField(coeffs, grid)
