"""Exception hierarchy.

Two families matter to callers: :class:`InputError` (bad tables, bad
arguments; CLI exit status 2) and :class:`NumericalError` (a computation
that could not be completed to the requested accuracy; exit status 3).
"""

from __future__ import annotations


class CamReggeError(Exception):
    """Base class for every error raised by this package."""

    stage: str | None = None


class InputError(CamReggeError, ValueError):
    pass


class NumericalError(CamReggeError, ArithmeticError):
    pass


# --- table ingestion -------------------------------------------------------

class MalformedRow(InputError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class NonMonotonicEnergy(InputError):
    pass


class MissingJ(InputError):
    def __init__(self, energy: float, J: int):
        self.energy = energy
        self.J = J
        super().__init__(f"missing J={J} at E={energy!r} meV")


class UnitarityViolation(InputError):
    def __init__(self, energy: float, J: int, modulus: float, tol: float):
        self.energy = energy
        self.J = J
        self.modulus = modulus
        super().__init__(
            f"|S|={modulus!r} exceeds 1+{tol:g} at E={energy!r} meV, J={J} (worst offender)"
        )


class HelicityNotSupported(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


# --- rational continuation -------------------------------------------------

class DegenerateSamples(InputError):
    pass


class IllConditioned(NumericalError):
    pass


class MultipleRoot(NumericalError):
    pass


# --- amplitudes ------------------------------------------------------------

class QuadratureNotConverged(NumericalError):
    def __init__(self, phi: float, energy: float | None = None):
        self.phi = phi
        self.energy = energy
        where = f"phi={phi!r} rad" + ("" if energy is None else f", E={energy!r} meV")
        super().__init__(f"panel bisection exhausted at {where}")


class EndpointTheta(InputError):
    pass


class PhiOutOfGrid(InputError):
    pass


class TruncationTooCoarse(NumericalError):
    pass


# --- resonances and trajectories -------------------------------------------

class SpuriousPole(InputError):
    pass


class TooFewPoints(InputError):
    pass


class BetaNearZero(NumericalError):
    pass


class NonPositiveImaginaryPart(InputError):
    pass


class PoleOnRealAxis(InputError):
    pass
