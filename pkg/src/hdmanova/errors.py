"""Exception hierarchy shared by all modules."""


class HDManovaError(Exception):
    """Base class for every error raised by this package."""


class InvalidDataset(HDManovaError, ValueError):
    pass


class DimensionMismatch(InvalidDataset):
    pass


class TooFewGroups(InvalidDataset):
    pass


class TooFewObservations(InvalidDataset):
    pass


class NonFiniteEntry(InvalidDataset):
    pass


class InvalidPairs(InvalidDataset):
    pass


class NotPSD(HDManovaError, ValueError):
    pass


class DegenerateCoordinate(HDManovaError, ValueError):
    """A pooled scale is zero while tau > 0, so the coordinate cannot be standardized."""


class BadQuantileLevel(HDManovaError, ValueError):
    pass


class GridTooCoarse(HDManovaError, ValueError):
    pass


class GridMismatch(HDManovaError, ValueError):
    pass


class UnsupportedSmoothness(HDManovaError, ValueError):
    pass


class UnknownScenario(HDManovaError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


class BadBudget(HDManovaError, ValueError):
    pass
