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
Exception hierarchy shared by all nlskg modules.
"""


class NlskgError(Exception):
    """
    Base class of every error raised by nlskg.
    """


class InvalidFieldError(NlskgError, ValueError):
    """
    A field contains NaN or Inf values.
    """


class SymmetryError(NlskgError, ValueError):
    """
    Spectral coefficients violate Hermitian symmetry, so they do not
    describe a real field.
    """


class GridMismatchError(NlskgError, ValueError):
    """
    Operands live on different grids, at different times, or on slow and
    fast grids that are not commensurate.
    """


class ZeroModeError(NlskgError, ValueError):
    """
    A field has a nonzero mean (k = 0 coefficient) beyond tolerance.
    """


class BlowUpError(NlskgError, RuntimeError):
    """
    Time integration produced non-finite or exploding coefficients.
    """

    def __init__(self, t, message):
        """
        @param t
        The time at which the blow-up was detected.

        @param message
        Diagnostic text.
        """
        super(BlowUpError, self).__init__("t={:.6g}: {}".format(t, message))
        self.t = t


class ResonanceError(NlskgError, ArithmeticError):
    """
    A normal-form or coefficient denominator fell below its guard.
    """


class UnsupportedRegimeError(NlskgError, ValueError):
    """
    The requested construction does not exist for the given parameters,
    e.g. a bright soliton of a defocusing NLS equation.
    """


class StaleEnvelopeError(NlskgError, ValueError):
    """
    The NLS envelope has not been evolved to the slow time eps**2 * t.
    """


class PreconditionError(NlskgError, ValueError):
    """
    An argument is outside the domain of an operation.
    """


class ConfigError(NlskgError, ValueError):
    """
    Invalid experiment or stepper configuration.
    """


class FitError(NlskgError, ValueError):
    """
    A power-law fit cannot be computed from the given points.
    """
