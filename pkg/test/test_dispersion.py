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

import numpy as np
import pytest

from nlskg.classes.dispersion import (carrier, harmonic_nonresonance, nonresonance_constant, omega,
                                      rho, rho_prime, rho_quotient, sign)
from nlskg.classes.errors import PreconditionError


def test_dispersion_relation():
    k = np.linspace(-20, 20, 4001)
    np.testing.assert_allclose(omega(k) ** 2, 1 + k * k, rtol=1e-15)
    np.testing.assert_array_equal(np.sign(omega(k[k != 0])), np.sign(k[k != 0]))


def test_sign_convention_at_zero():
    assert sign(0.0) == 1.0
    assert omega(0.0) == 1.0
    assert omega(0.0, zero_sign=-1.0) == -1.0
    assert rho(0.0) == 0.0


def test_rho_is_odd():
    k = np.linspace(0.1, 10, 50)
    np.testing.assert_array_equal(rho(-k), -rho(k))
    assert rho(2.0) == pytest.approx(4 / np.sqrt(5))


def test_rho_prime_matches_difference_quotient():
    k = np.linspace(-5, 5, 100)
    h = 1e-5
    np.testing.assert_allclose(rho_prime(k), (rho(k + h) - rho(k - h)) / (2 * h), atol=1e-8)


def test_rho_quotient_removable_singularity():
    m = np.array([-2.0, 0.5, 3.0])
    np.testing.assert_array_equal(rho_quotient(m, m), rho_prime(m))
    np.testing.assert_allclose(rho_quotient(m + 1e-7, m), rho_prime(m), rtol=1e-6)
    assert rho_quotient(2.0, 1.0) == pytest.approx(float(rho(2.0) - rho(1.0)))


def test_carrier_data():
    c = carrier(1.0)
    assert c.omega0 == pytest.approx(np.sqrt(2))
    assert c.cg == pytest.approx(1 / np.sqrt(2))
    assert c.omega2 == pytest.approx(2 ** -1.5)
    assert c.phase_velocity == pytest.approx(np.sqrt(2))
    with pytest.raises(PreconditionError):
        carrier(0.0)


def test_harmonic_gaps():
    gaps = harmonic_nonresonance(1.0, 10)
    assert [m for m, _ in gaps] == list(range(2, 11))
    assert all(gap > 0 for _, gap in gaps)
    assert gaps[0][1] == pytest.approx(0.5923591, abs=1e-7)
    with pytest.raises(PreconditionError):
        harmonic_nonresonance(1.0, 1)


def test_nonresonance_constant_k1_3():
    result = nonresonance_constant(1.0, 3.0, grid_density=100)
    assert result.value > 0
    assert np.sqrt(10) - 3 - 1e-12 <= result.value <= np.sqrt(10) - 3 + 0.005
    assert result.j1 in (-1, 1) and result.j2 in (-1, 1)


def test_nonresonance_constant_decreases():
    values = [nonresonance_constant(1.0, k1, grid_density=100).value for k1 in (1.0, 2.0, 3.0, 5.0)]
    assert all(v > 0 for v in values)
    assert all(b < a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("args", [(0.0, 3.0, 100), (1.0, 0.0, 100), (1.0, 3.0, 50)])
def test_nonresonance_preconditions(args):
    with pytest.raises(PreconditionError):
        nonresonance_constant(*args)
