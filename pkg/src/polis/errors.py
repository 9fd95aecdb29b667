class InvalidConfiguration(ValueError):
    """Raised for parameter sets that violate a type's invariants."""


class OptimizerError(RuntimeError):
    """An objective evaluation failed mid-run.

    ``partial`` holds the :class:`~polis.metaheuristics.OptimizerRun` built
    from the evaluations completed before the failure.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class SmallSampleWarning(UserWarning):
    """Normal-approximation interval computed from 30 or fewer samples."""
