"""Exception hierarchy shared by all modules."""


class BranchoError(ValueError):
    """Base class for domain errors (CLI exit code 1)."""


class DegenerateCurve(BranchoError):
    pass


class VertexParameter(BranchoError):
    pass


class BadInterval(BranchoError):
    pass


class OverlayDegeneracy(BranchoError):
    pass


class BadAlpha(BranchoError):
    pass


class UnbalancedMeasure(BranchoError):
    pass


class NonGenericLevel(BranchoError):
    pass


class NoQuasiCycle(BranchoError):
    pass


class EpsTooLarge(BranchoError):
    pass


class NonSimpleAtom(BranchoError):
    pass


class NegativeResidual(BranchoError):
    """Raised if a shortcut would give an atom negative residual mass."""


class TooManyAtoms(BranchoError):
    pass


class MassMismatch(BranchoError):
    pass


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise BadAlpha(f"alpha must lie in (0, 1], got {alpha}")
    return alpha
