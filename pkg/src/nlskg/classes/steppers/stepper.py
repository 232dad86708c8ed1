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


class Stepper():
    """
    Base class of the time steppers for semilinear systems

        y' = L y + N(y)

    with a linear part L that is diagonal (or 2x2 block diagonal) in
    Fourier space and whose flow exp(h L) is known exactly.

    The system object supplies the two ingredients:

      * system.propagate(y, h): exact linear flow exp(h L) y
      * system.nonlinear(y): the nonlinear term N(y)
      * system.nonlinearity: False if N is switched off

    Subclasses implement step(). Their state is a plain complex array of
    shape (2, n) holding the two spectral components.
    """

    name = None
    order = None

    def __init__(self, system):
        """
        @param system
        Object providing propagate(), nonlinear() and the nonlinearity flag.
        """
        self.system = system

    def propagate(self, y, h):
        return self.system.propagate(y, h)

    def nonlinear(self, y):
        return self.system.nonlinear(y)

    def step(self, y, h):
        """
        Advance y by one step of size h and return the new state.
        """
        raise NotImplementedError("stepper '{}' does not implement step()".format(type(self).__name__))
