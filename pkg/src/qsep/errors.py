"""Exception hierarchy for the qsep package.

Every failure mode that callers are expected to branch on gets its own
class; generic misuse (wrong types, malformed arguments) raises the
usual ValueError/TypeError instead.
"""


class QsepError(Exception):
    """Base class for all qsep-specific errors."""


# ---------------------------------------------------------------------------
# matrix-core errors
# ---------------------------------------------------------------------------

class NonSquare(QsepError):
    """Operation requires a square matrix."""


class DimensionMismatch(QsepError):
    """Matrix dimensions are incompatible for the requested operation."""


class NegativeRealEigenvalue(QsepError):
    """A strictly negative real eigenvalue blocks the principal square root."""

    def __init__(self, eigenvalue, msg=None):
        self.eigenvalue = eigenvalue
        super().__init__(msg or f"eigenvalue {eigenvalue} lies on the negative real axis")


class DefectiveZeroEigenvalue(QsepError):
    """The zero eigenvalue has a nontrivial Jordan block.

    ``decidable`` is False for 2x2 inputs, where no certificate or
    refutation is available for the phasal-scaling construction.
    """

    def __init__(self, msg=None, decidable=True):
        self.decidable = decidable
        super().__init__(msg or "zero eigenvalue is not semi-simple")


class DefectiveNonzeroEigenvalue(QsepError):
    """A nonzero eigenvalue is numerically defective (eigenvector matrix too ill-conditioned)."""


class UnitCircleEigenvalue(QsepError):
    """An eigenvalue lies (numerically) on the unit circle."""

    def __init__(self, eigenvalue, msg=None):
        self.eigenvalue = eigenvalue
        super().__init__(msg or f"eigenvalue {eigenvalue} lies on the unit circle")


class IllConditionedEigenvectors(QsepError):
    """Eigenvector matrix condition number exceeds the configured cap."""


class TargetOutsideRange(QsepError):
    """Requested target value lies outside the numerical range."""


# ---------------------------------------------------------------------------
# phase errors
# ---------------------------------------------------------------------------

class ZeroMatrix(QsepError):
    """Phases are undefined for the zero matrix."""


class NotSectorial(QsepError):
    """Sectorial factorization requires the origin outside the numerical range."""


# ---------------------------------------------------------------------------
# separation errors
# ---------------------------------------------------------------------------

class UnknownForm(QsepError):
    """Unrecognized separation form or unsupported conversion."""


class NotVerifiedForSource(QsepError):
    """Multiplier does not verify for the conversion's source form."""


class ConversionFailsVerification(QsepError):
    """Converted multiplier fails verification for the target form."""


# ---------------------------------------------------------------------------
# synthesis errors
# ---------------------------------------------------------------------------

class SpectrumOnNegativeRealAxis(QsepError):
    """The product AB has an eigenvalue on the strictly negative real axis."""

    def __init__(self, eigenvalue, msg=None):
        self.eigenvalue = eigenvalue
        super().__init__(msg or f"eigenvalue {eigenvalue} of the product lies on the negative real axis")


class PhaseSumViolated(QsepError):
    """Largest/smallest phase sums leave the admissible band for every integer offset."""

    def __init__(self, sum_hi, sum_lo, offset, msg=None, hint=None):
        self.sum_hi = sum_hi
        self.sum_lo = sum_lo
        self.offset = offset
        self.hint = hint
        super().__init__(
            msg or f"phase sums ({sum_hi:.6g}, {sum_lo:.6g}) violate the (-pi, pi) band at offset m={offset}"
        )


class ClassViolated(QsepError):
    """Sectorial-class pattern required by the construction does not hold."""


class NoGainCertificate(QsepError):
    """Neither singular-value condition holds; no scaled-gain multiplier exists."""


# ---------------------------------------------------------------------------
# adversary errors
# ---------------------------------------------------------------------------

class ConditionHolds(QsepError):
    """The robustness condition holds, so no destabilizing witness exists."""


class ConstructionFallbackFailed(QsepError):
    """Randomized fallback exhausted its budget without a valid witness."""

    def __init__(self, best_witness, msg=None):
        self.best_witness = best_witness
        super().__init__(msg or "fallback search exhausted; best candidate attached")


# ---------------------------------------------------------------------------
# LTI errors
# ---------------------------------------------------------------------------

class ResolventSingular(QsepError):
    """j*omega is an eigenvalue of the state matrix."""


class OpenLoopUnstable(QsepError):
    """An open-loop system is not stable."""


class IllPosed(QsepError):
    """Feedback loop is ill-posed: det(I + D_G D_K) = 0."""


class SignConditionViolated(QsepError):
    """A diagonal block of the multiplier violates its required sign."""

    def __init__(self, omega, block, msg=None):
        self.omega = omega
        self.block = block
        super().__init__(msg or f"multiplier block {block} violates its sign condition at omega={omega}")


class InverseNotInRHinf(QsepError):
    """Flipped-sign mode requires both plant inverses to be stable."""


class FeedbackUnstable(QsepError):
    """Closed loop is unstable."""


class EpsilonUnderflow(QsepError):
    """Necessity construction failed to find a positive epsilon above the floor."""


class PerFrequencyFailure(QsepError):
    """Per-frequency synthesis failed at some grid point."""

    def __init__(self, omega, reason, msg=None):
        self.omega = omega
        self.reason = reason
        super().__init__(msg or f"synthesis failed at omega={omega}: {reason}")


class XiInconsistent(QsepError):
    """The sign parameter of the scaled-gain family flips across the grid."""


class PreconditionViolatedAtOmega(QsepError):
    """A family-specific matrix precondition fails at some grid frequency."""

    def __init__(self, omega, reason, msg=None):
        self.omega = omega
        self.reason = reason
        super().__init__(msg or f"precondition violated at omega={omega}: {reason}")


class EndpointInfeasible(QsepError):
    """No real rotation sign works at a frequency endpoint."""

    def __init__(self, omega, detail=None, msg=None):
        self.omega = omega
        self.detail = detail
        super().__init__(msg or f"no real rotation multiplier exists at omega={omega}")


class NonPositiveParameter(QsepError):
    """All-pass pole parameter must be strictly positive."""


# ---------------------------------------------------------------------------
# CLI / IO errors
# ---------------------------------------------------------------------------

class ParseError(QsepError):
    """Problem file is not valid JSON."""

    def __init__(self, msg, line=None, column=None):
        self.line = line
        self.column = column
        super().__init__(msg)


class SchemaError(QsepError):
    """Problem file violates the expected schema."""

    def __init__(self, msg, path=""):
        self.path = path
        super().__init__(msg)


class DimensionError(QsepError):
    """Problem file payload has inconsistent dimensions."""


class IoError(QsepError):
    """Report could not be written."""
