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


class StrangSplit(Stepper):
    """
    Symmetric splitting: half a step of the exact linear flow, one RK4 step
    of y' = N(y), another half linear step. Second order in h; exact when
    the nonlinearity is switched off.
    """

    name = "strang_split"
    order = 2

    def step(self, y, h):
        y = self.propagate(y, 0.5 * h)
        if self.system.nonlinearity:
            a = self.nonlinear(y)
            b = self.nonlinear(y + 0.5 * h * a)
            c = self.nonlinear(y + 0.5 * h * b)
            d = self.nonlinear(y + h * c)
            y = y + h / 6.0 * (a + 2.0 * b + 2.0 * c + d)
        return self.propagate(y, 0.5 * h)
