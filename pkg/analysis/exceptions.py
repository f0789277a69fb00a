class AnalysisError(Exception):
    """Base class for statistics and ranking-model errors"""


class UndefinedStatisticError(AnalysisError, ValueError):
    """A statistic is undefined for the given input (constant column, too few values)"""


class RankDeficientError(AnalysisError):
    """The design matrix does not have full column rank"""

    def __init__(self, column):
        self.column = column
        super().__init__(f"design matrix is rank deficient: column {column!r} is collinear with earlier columns")


class FoldError(AnalysisError):
    """Cross-validation cannot split the data into the requested folds"""
