class AhflowException(Exception):
    pass


class SeriesException(AhflowException):
    pass


class NonInvertibleSeries(SeriesException, ZeroDivisionError):
    pass


class ScalarKindMismatch(SeriesException, TypeError):
    pass


class SubstitutionError(SeriesException, ValueError):
    pass


class UnknownCoefficient(SeriesException, LookupError):
    pass


class GeometryException(AhflowException):
    pass


class DegenerateMetric(GeometryException):
    pass


class ChartError(GeometryException, ValueError):
    pass


class MassException(AhflowException):
    pass


class MassOrderError(MassException, ValueError):
    pass


class ExtrapolationError(MassException, ValueError):
    pass


class FlowException(AhflowException):
    pass


class StabilityError(FlowException, ArithmeticError):
    pass


class FitConditionError(FlowException, ArithmeticError):
    def __init__(self, msg, condition_number=None):
        super().__init__(msg)
        self.condition_number = condition_number


class InsufficientSamples(FlowException, ValueError):
    pass


class ScenarioError(AhflowException, ValueError):
    pass


class CheckFailure(AhflowException):
    def __init__(self, check_name, detail=""):
        super().__init__(f"check failed: {check_name} {detail}".strip())
        self.check_name = check_name


# Numerical aborts map to one exit status
NumericalAbort = (StabilityError, FitConditionError, ExtrapolationError, DegenerateMetric, NonInvertibleSeries)
