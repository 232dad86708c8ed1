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

from nlskg.classes.energy import (EnergyTrace, ErrorPair, PsiData, apply_G, apply_N, check_adjoint_identity,
                                  check_normal_form_identity, check_parts_identities, check_splitting,
                                  derivative_norm, energy, energy_trace, equivalence_ratios, extract_error,
                                  growth_ratio, kernel_n, kernel_s, parts_terms)
from nlskg.classes.errors import GridMismatchError, PreconditionError, ResonanceError
from nlskg.classes.harness import kernel_symmetry_defect, random_psi
from nlskg.classes.kg_solver import DiagonalState
from nlskg.classes.spectral import (FourierGrid, RealField, SpectralField, random_band_limited,
                                    sobolev_norm, transform)

SIGN_PAIRS = [(1, 1), (1, -1), (-1, 1), (-1, -1)]

GRID = FourierGrid.for_carrier(1.0, 8, 256)
# products of carrier bands with fields up to this index stay dealias-safe
F_TOP = 23


def cosine(grid, k, amplitude=1.0):
    return transform(RealField(amplitude * np.cos(k * grid.x), grid))


def unit(field):
    return field / sobolev_norm(field, 0)


def random_fields(seed, count, top=F_TOP):
    rng = np.random.default_rng(seed)
    psi = random_psi(GRID, rng, 1.0, 0.25, 2)
    return psi, [unit(random_band_limited(GRID, rng, top)) for _ in range(count)]


def test_kernel_point_values():
    assert kernel_n(2.0, 1.0, 1.0, 1, 1) == pytest.approx(0.8, abs=1e-15)
    assert kernel_n(2.0, 1.0, 1.0, 1, -1) == pytest.approx(0.3532141, abs=1e-7)


def test_kernel_guard():
    with pytest.raises(ResonanceError):
        kernel_n(1.0, 1.0, np.sqrt(7.0), 1, 1)


def test_kernel_symmetry_on_grid():
    assert kernel_symmetry_defect(GRID, 1.0, 0.25, 2) == 0.0


def test_s_kernel_diagonal_limit():
    at = kernel_s(np.array([1.0]), 0.5, np.array([1.0]), 1, 1)
    near = kernel_s(np.array([1.0 + 1e-6]), 0.5, np.array([1.0]), 1, 1)
    assert np.all(np.isfinite(at))
    np.testing.assert_allclose(near, at, rtol=1e-5)


def test_apply_N_single_modes():
    grid = FourierGrid.for_carrier(1.0, 1, 64)
    psi = PsiData(cosine(grid, 1.0))
    f = cosine(grid, 1.0)
    assert apply_N(psi, f, 1, 1).coeffs[2] == pytest.approx(0.8 * 0.25, abs=1e-15)
    assert apply_N(psi, f, 1, -1).coeffs[2] == pytest.approx(0.3532141 * 0.25, abs=1e-7)


def test_apply_N_is_bilinear_and_real():
    psi, (f, g) = random_fields(0, 2)
    zero = SpectralField.zeros(GRID)
    for j1, j2 in SIGN_PAIRS:
        assert np.all(apply_N(psi, zero, j1, j2).coeffs == 0)
        out = apply_N(psi, f, j1, j2)
        assert out.hermitian_defect() <= 1e-12
        combined = apply_N(psi, f + g * 2.0, j1, j2)
        np.testing.assert_allclose(combined.coeffs, (out + apply_N(psi, g, j1, j2) * 2.0).coeffs, atol=1e-13)
    assert np.all(apply_N(PsiData(zero), f, 1, 1).coeffs == 0)


def test_G_multipliers():
    grid = FourierGrid.for_carrier(1.0, 1, 16)
    h = cosine(grid, 2.0)
    assert apply_G(h, 1, 1).coeffs[2] == pytest.approx(0.5 * 0.2360680j, abs=1e-7)
    np.testing.assert_allclose(apply_G(h, 1, -1).coeffs, 0.5 * h.coeffs)


def test_G_difference():
    psi, _ = random_fields(1, 0)
    h = psi.psi_hat
    k = GRID.wavenumbers
    difference = apply_G(h, -1, -1).coeffs - apply_G(h, 1, 1).coeffs
    np.testing.assert_allclose(difference, 2j * k * h.coeffs, atol=1e-12)


def test_identities_vanish_for_zero_input():
    psi, (f, g) = random_fields(2, 2)
    zero = SpectralField.zeros(GRID)
    assert check_normal_form_identity(psi, zero, 1, 1) == 0.0
    assert check_normal_form_identity(PsiData(zero), f, 1, -1) == 0.0
    assert check_adjoint_identity(psi, zero, g, -1, 1) == 0.0


def test_normal_form_identity_single_modes():
    psi = PsiData(cosine(GRID, 1.0))
    f = cosine(GRID, 1.5)
    for j1, j2 in SIGN_PAIRS:
        assert check_normal_form_identity(psi, f, j1, j2) <= 1e-13


@pytest.mark.parametrize("seed", range(5))
def test_normal_form_identity(seed):
    psi, (f,) = random_fields(seed, 1)
    for j1, j2 in SIGN_PAIRS:
        assert check_normal_form_identity(psi, f, j1, j2) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_adjoint_identity(seed):
    psi, (f, g) = random_fields(seed, 2)
    for j1, j2 in SIGN_PAIRS:
        assert check_adjoint_identity(psi, f, g, j1, j2) <= 1e-10


@pytest.mark.parametrize("seed", range(5))
def test_parts_identities(seed):
    _, fields = random_fields(seed, 4)
    d50, d51 = check_parts_identities(fields[:2], fields[2:])
    assert d50 <= 1e-10
    assert d51 <= 1e-10


def test_parts_with_constant_coefficient():
    _, (f_m1, f_p1) = random_fields(3, 2)
    c = np.zeros(GRID.n, dtype=complex)
    c[0] = 1.0
    a = SpectralField(c, GRID)
    for lhs, rhs in parts_terms((a, a), (f_m1, f_p1))["dx1"]:
        assert abs(lhs) <= 1e-12
        assert abs(rhs) <= 1e-12


def test_parts_leading_term_vanishes_for_equal_coefficients():
    _, (a, f_m1, f_p1) = random_fields(4, 3)
    terms = parts_terms((a, a), (f_m1, f_p1))
    assert terms["leading"] == 0.0
    assert terms["sum"] == pytest.approx(terms["remainder"], abs=1e-12)


def test_splitting_remainder_does_not_grow_with_frequency():
    grid = FourierGrid.for_carrier(1.0, 1, 256)
    psi = PsiData(cosine(grid, 1.0))
    for j1, j2 in SIGN_PAIRS:
        low = check_splitting(psi, cosine(grid, 10.0), j1, j2)
        high = check_splitting(psi, cosine(grid, 40.0), j1, j2)
        assert np.isfinite(low) and low > 0
        assert high <= low


def test_extract_error_recovers_field():
    eps = 0.1
    _, (a, b, r_m1, r_p1) = random_fields(5, 4)
    ansatz = DiagonalState(a * eps, b * eps, 2.0)
    sim = DiagonalState(ansatz.um1_hat + r_m1 * eps ** 2.5, ansatz.up1_hat + r_p1 * eps ** 2.5, 2.0)
    err = extract_error(sim, ansatz, eps)
    np.testing.assert_allclose(err.r_m1.coeffs, r_m1.coeffs, atol=1e-12)
    np.testing.assert_allclose(err.r_p1.coeffs, r_p1.coeffs, atol=1e-12)
    assert err.t == 2.0
    assert err.r_m1.is_hermitian()
    zero = extract_error(ansatz, ansatz, eps)
    assert np.all(zero.r_m1.coeffs == 0) and np.all(zero.r_p1.coeffs == 0)


def test_extract_error_mismatch():
    _, (a, b) = random_fields(6, 2)
    with pytest.raises(GridMismatchError):
        extract_error(DiagonalState(a, b, 1.0), DiagonalState(a, b, 2.0), 0.1)
    other = FourierGrid.for_carrier(1.0, 8, 128)
    z = SpectralField.zeros(other)
    with pytest.raises(GridMismatchError):
        extract_error(DiagonalState(a, b, 1.0), DiagonalState(z, z, 1.0), 0.1)


def test_energy_without_coupling():
    psi, (r_m1, r_p1) = random_fields(7, 2)
    b = energy(ErrorPair(r_m1, r_p1, eps=0.0, t=0.0), psi, s=6)
    assert len(b.e_ell) == 7 and len(b.h_ell) == 6
    expected = 0.5 * (derivative_norm(r_m1, 6) ** 2 + derivative_norm(r_p1, 6) ** 2)
    assert b.e_total == pytest.approx(expected, rel=1e-12)
    assert b.e_modified == b.e_total
    assert b.e_ell[0] == pytest.approx(0.5 * (sobolev_norm(r_m1, 0) ** 2 + sobolev_norm(r_p1, 0) ** 2))


def test_energy_of_zero_error():
    psi, _ = random_fields(8, 0)
    zero = SpectralField.zeros(GRID)
    b = energy(ErrorPair(zero, zero, eps=0.1, t=0.0), psi)
    assert b.e_total == 0 and b.e_modified == 0
    assert all(h == 0 for h in b.h_ell)


def test_energy_totals():
    psi, (r_m1, r_p1) = random_fields(9, 2)
    b = energy(ErrorPair(r_m1, r_p1, eps=0.1, t=0.0), psi, s=3)
    assert b.e_total == pytest.approx(sum(b.e_ell))
    assert b.e_modified == pytest.approx(b.e_total + 0.5 * 0.1 ** 2 * sum(b.h_ell))


def test_negative_energy_index_rejected():
    psi, (r,) = random_fields(10, 1)
    with pytest.raises(PreconditionError):
        energy(ErrorPair(r, r, eps=0.1, t=0.0), psi, s=-1)


@pytest.mark.parametrize("seed", range(20))
def test_energy_equivalence(seed):
    rng = np.random.default_rng(1000 + seed)
    psi = random_psi(GRID, rng, 1.0, 0.25, 2)
    r_m1 = random_band_limited(GRID, rng, 16)
    r_p1 = random_band_limited(GRID, rng, 16)
    err = ErrorPair(r_m1 / sobolev_norm(r_m1, 6), r_p1 / sobolev_norm(r_p1, 6), eps=0.05, t=0.0)
    ratio, by_sobolev = equivalence_ratios(energy(err, psi), err)
    assert 0.4 <= ratio <= 1.1
    assert 0 < by_sobolev <= ratio


def test_equivalence_ratios_of_a_single_mode():
    psi, _ = random_fields(12, 0)
    f = cosine(GRID, 1.0)
    err = ErrorPair(f, f, eps=0.0, t=0.0)
    by_derivatives, by_sobolev = equivalence_ratios(energy(err, psi), err)
    assert by_derivatives == pytest.approx(0.5, rel=1e-12)
    # sum_{l<=6} k**(2l) against (1 + k**2)**6 at k = 1
    assert by_sobolev == pytest.approx(np.sqrt(7.0) / 16.0, rel=1e-12)


def carrier_states(eps, times, error=None):
    psi = cosine(GRID, 1.0, eps)
    ansatz = {t: DiagonalState(psi, psi * 0.0, t) for t in times}
    if error is None:
        return ansatz, [ansatz[t] for t in times]
    return ansatz, [DiagonalState(ansatz[t].um1_hat + error * eps ** 2.5, ansatz[t].up1_hat, t) for t in times]


def test_energy_trace_of_exact_trajectory():
    times = [0.0, 0.5, 1.0, 1.5]
    ansatz, trajectory = carrier_states(0.1, times)
    trace = energy_trace(trajectory, ansatz.get, 0.1, s=6)
    assert trace.times == times
    assert trace.e_total == [0.0] * 4
    assert trace.rate == [0.0] * 4
    assert trace.ratio == [0.0] * 4
    assert trace.sup_e_modified == 0.0
    assert trace.gap_constant == 0.0


def test_energy_trace_of_constant_error():
    times = [0.0, 0.5, 1.0]
    _, (error,) = random_fields(11, 1)
    ansatz, trajectory = carrier_states(0.1, times, error)
    trace = energy_trace(trajectory, ansatz.get, 0.1, s=2)
    assert trace.e_modified[0] > 0
    np.testing.assert_allclose(trace.e_modified, trace.e_modified[0], rtol=1e-12)
    np.testing.assert_allclose(trace.rate, 0.0, atol=1e-10)
    assert len(trace.rows()) == 3
    assert trace.gap_constant >= 0
    assert trace.coercive
    assert trace.gronwall_bounded(10.0) == (trace.sup_e_modified <= 10.0 * (trace.e_modified[0] + 1.0))


def test_growth_ratio():
    assert growth_ratio(0.0, 0.0, 0.1) == 0.0
    assert growth_ratio(0.01, 0.0, 0.1) == pytest.approx(1.0)
    assert growth_ratio(0.02, 1.0, 0.1) == pytest.approx(2.0 / (2.0 + 0.1 ** 0.5))
    assert np.isnan(growth_ratio(0.01, -1e-3, 0.1))


def test_negative_energy_is_not_coercive():
    trace = EnergyTrace(eps=0.1, s=6, times=[0.0, 1.0], e_total=[1.0, -2.0], e_modified=[1.0, -2.0])
    assert not trace.coercive
    assert not trace.gronwall_bounded(10.0)
    growing = EnergyTrace(eps=0.1, s=6, times=[0.0, 1.0], e_total=[1.0, 30.0], e_modified=[1.0, 30.0])
    assert growing.coercive
    assert not growing.gronwall_bounded(10.0)
    assert EnergyTrace(eps=0.1, s=6, times=[0.0, 1.0], e_total=[1.0, 19.0],
                       e_modified=[1.0, 19.0]).gronwall_bounded(10.0)
