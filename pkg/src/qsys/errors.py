"""Exception hierarchy shared by all qsys modules."""


class QsysError(Exception):
    """Base class for all errors raised by this package."""


# polynomial / rational arithmetic

class ZeroPolynomial(QsysError):
    """Operation undefined for the identically-zero polynomial."""


class SingularRational(QsysError):
    """Rational matrix is not invertible."""


class ShapeMismatch(QsysError):
    """Operand shapes are not conformable."""


class EvalAtPole(QsysError):
    """Evaluation point coincides with a pole."""


# state space

class SingularD(QsysError):
    """Feed-through matrix is singular; system inverse undefined."""


class AlgebraicLoop(QsysError):
    """I - D1*D2 singular: the feedback loop has no solution."""


class SingularT(QsysError):
    """Similarity transformation matrix is singular."""


class NonSquare(QsysError):
    """Operation requires a square transfer matrix."""


class NonMinimal(QsysError):
    """Operation requires a minimal realization."""


# gates and circuits

class BadParam(QsysError):
    """Gate or system parameter outside its admissible domain."""


class CayleySingular(QsysError):
    """I - G singular: Cayley transform undefined."""


class CompositionSingular(QsysError):
    """2 + G_in - G_out singular: Cayley composition undefined."""


class DanglingInternalPort(QsysError):
    """Circuit wiring leaves an internal field unmatched."""


class FeedbackSingular(QsysError):
    """1 + g*k = 0: displacement feedback loop diverges."""


class BasisMismatch(QsysError):
    """Operands carry incompatible basis tags."""


class MixedBasis(BasisMismatch):
    """Gates in one circuit carry different basis tags."""


class UnknownCatalogName(QsysError):
    """No catalog entry under this name."""


# loops and closures

class BadLoopSpec(QsysError):
    """Loop specification is inconsistent or incomplete."""


class SingularResummation(QsysError):
    """I - Delta*X identically singular: geometric resummation undefined."""


class SingularClosure(QsysError):
    """Homographic closure denominator is singular."""


# S-matrix engine

class UnknownSetting(QsysError):
    """No contraction table for this setting."""


class DivergentSeries(QsysError):
    """Spectral radius >= 1: truncated series does not converge."""


class SingularDyson(QsysError):
    """I + bare*K identically singular: Dyson equation has no solution."""


class DivergentFusion(QsysError):
    """|mu*k| >= 1: exponential fusion series diverges."""


# nonlinear / spin

class NotHermitian(QsysError):
    """Spin Hamiltonian is not Hermitian."""


class NonDiagonalH(QsysError):
    """Closed form only available for a diagonal spin Hamiltonian."""


# symmetry certificates

class SylvesterSingular(QsysError):
    """A and -A^T share eigenvalues; the certificate equation is degenerate."""


# chain scattering

class NotInvertibleBlock(QsysError):
    """Required off-diagonal block is not invertible.

    The representation would need augmentation with virtual ports, which
    this package does not perform.
    """


# CLI / serialization

class SchemaError(QsysError):
    """Circuit document violates the schema."""
