"""Exception types raised by the library.

Every error carries the offending parameter values in ``params`` so callers
(including the batch runner) can serialize it without parsing the message.
"""

from __future__ import annotations


class TomographyError(ValueError):
    """Base class for precondition violations."""

    def __init__(self, message: str, **params):
        super().__init__(message)
        self.params = params

    def to_dict(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": str(self),
            "params": {k: _plain(v) for k, v in self.params.items()},
        }


class NumericalError(TomographyError):
    """Base class for failures of a numerical procedure."""


class DimensionMismatch(TomographyError):
    pass


class NonHermitian(TomographyError):
    pass


class NotUnitary(TomographyError):
    pass


class InvalidState(TomographyError):
    pass


class NonOrthonormalBasis(TomographyError):
    pass


class NormalizationVanishes(TomographyError):
    """The probe/environment overlap product is zero, so nothing can be divided out."""


class VanishingPathAmplitude(TomographyError):
    pass


class VanishingOverlap(TomographyError):
    pass


class OrthogonalPostselection(TomographyError):
    pass


class DegenerateAngle(TomographyError):
    pass


class DegenerateCoupling(TomographyError):
    pass


class DegenerateSpectrum(TomographyError):
    pass


class VanishingDenominator(TomographyError):
    pass


class ZeroStep(TomographyError):
    pass


class IllConditioned(NumericalError):
    pass


def _plain(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if hasattr(v, "tolist"):
        v = v.tolist()
        if isinstance(v, complex):
            return [v.real, v.imag]
    return v
