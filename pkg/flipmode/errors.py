# flipmode/errors.py


class FlipmodeError(Exception):
    """Base class for every error raised by the flipmode library."""


class InvalidGrid(FlipmodeError):
    pass


class GridMismatchError(FlipmodeError):
    """Two sampled objects live on different grids."""

    def __init__(self, left, right):
        self.left = left
        self.right = right
        super().__init__(f"Grid mismatch: {left} vs {right}.")


class InvalidMode(FlipmodeError):
    pass


class InvalidParameter(FlipmodeError):
    pass


class InvalidState(FlipmodeError):
    """The mean/covariance pair does not describe a physical Gaussian state."""


class NonUnitaryError(FlipmodeError):
    def __init__(self, deviation):
        self.deviation = deviation
        super().__init__(f"Matrix is not unitary; max |U U^dagger - I| = {deviation:.3e}.")


class InvalidLayout(FlipmodeError):
    pass


class BasisMismatchError(FlipmodeError):
    pass


class SimulationError(FlipmodeError):
    pass


class DegeneratePhysicsError(FlipmodeError):
    """The request is well formed but the physics has no answer for it."""


class ZeroMeanFieldError(DegeneratePhysicsError):
    def __init__(self, message="Zero mean field: the mean-field mode v0 is undefined."):
        super().__init__(message)


class DegenerateMeasurement(DegeneratePhysicsError):
    pass


class NotADifferenceMeasurement(DegeneratePhysicsError):
    def __init__(self, mean_value):
        self.mean_value = mean_value
        super().__init__(
            f"Layout is not a difference measurement for this beam "
            f"(normalized mean {mean_value:.3e})."
        )
