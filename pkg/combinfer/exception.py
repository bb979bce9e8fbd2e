from typing import Optional, Sequence


class CombinferException(Exception):
    """base exception for all errors in Combinfer module"""
    __slots__ = []


class ContractViolation(CombinferException, ValueError):
    """an input broke the contract of the called operation"""
    __slots__ = ["layer"]

    def __init__(self, *args: object, layer: Optional[int] = None) -> None:
        super().__init__(*args)
        self.layer = layer


class EnumerationGuardError(ContractViolation):
    """exhaustive enumeration requested beyond its size guard"""
    __slots__ = []


class DatasetError(ContractViolation):
    """malformed dataset or report file, or dataset kind mismatch"""
    __slots__ = []


class NumericalError(CombinferException, ArithmeticError):
    """non-finite logits or losses"""
    __slots__ = ["step", "logits"]

    def __init__(
        self,
        *args: object,
        step: Optional[int] = None,
        logits: Optional[Sequence[float]] = None
    ) -> None:
        super().__init__(*args)
        self.step = step
        self.logits = logits


class TrainingDivergenceError(NumericalError):
    """training produced a non-finite loss or gradient"""
    __slots__ = ["iteration"]

    def __init__(self, *args: object, step: Optional[int] = None, iteration: Optional[int] = None) -> None:
        super().__init__(*args, step=step)
        self.iteration = iteration


class ConfigError(CombinferException, ValueError):
    """invalid run configuration"""
    __slots__ = []


class ThresholdError(CombinferException):
    """a diagnostic metric did not meet its threshold"""
    __slots__ = ["metric", "value", "threshold"]

    def __init__(self, *args: object, metric: str = "", value: float = 0.0, threshold: float = 0.0) -> None:
        super().__init__(*args)
        self.metric = metric
        self.value = value
        self.threshold = threshold
