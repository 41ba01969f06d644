"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`DivlabError`, so callers
(and the command-line front end) can distinguish our failures from plain
bugs.  Input problems additionally subclass ``ValueError`` and numeric
problems subclass ``ArithmeticError`` to stay friendly to generic handlers.
"""


class DivlabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidDistribution(DivlabError, ValueError):
    """A distribution-like object violates its construction invariants."""


class AlphabetMismatch(DivlabError, ValueError):
    """Two discrete distributions do not share shape/alphabet."""


class ZeroMarginal(DivlabError, ValueError):
    """A conditional slice was requested where the marginal mass is zero."""


class GridMismatch(DivlabError, ValueError):
    """Two grid densities do not share bounds and resolution."""


class DegenerateGrid(DivlabError, ValueError):
    """A grid captured (numerically) none of the density's mass."""


class NumericFault(DivlabError, ArithmeticError):
    """A quantity left its mathematically valid range beyond round-off."""


class NonFiniteObjective(DivlabError, ArithmeticError):
    """An optimizer was started at a point with a non-finite objective."""


class GridTooLarge(DivlabError, ValueError):
    """A brute-force simplex grid would exceed the enumeration budget."""


class EmptySamples(DivlabError, ValueError):
    """A sample-based estimator received an empty sample set."""


class DivergedTraining(DivlabError, ArithmeticError):
    """An adversarial training loop produced non-finite parameters."""


class ParseError(DivlabError, ValueError):
    """A config or data file could not be parsed."""
