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

from .stepper import Stepper


class LawsonRK4(Stepper):
    """
    Integrating-factor Runge-Kutta scheme of order 4 (Lawson).

    The classical RK4 tableau is applied to v = exp(-t L) y, so the linear
    part is integrated exactly. With the nonlinearity switched off a step
    is the exact linear flow.
    """

    name = "lawson_rk4"
    order = 4

    def step(self, y, h):
        if not self.system.nonlinearity:
            return self.propagate(y, h)

        half = 0.5 * h
        a = self.nonlinear(y)
        y_half = self.propagate(y, half)
        b = self.nonlinear(self.propagate(y + half * a, half))
        c = self.nonlinear(y_half + half * b)
        d = self.nonlinear(self.propagate(y, h) + h * self.propagate(c, half))
        return self.propagate(y + h / 6.0 * a, h) + h / 6.0 * (
            self.propagate(2.0 * (b + c), half) + d)
