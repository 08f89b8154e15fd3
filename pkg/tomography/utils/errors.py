from typing import List, Optional


class NumericalError(ArithmeticError):
    """
    Raised when a computation cannot continue: a singular system, a conductivity outside
    the admissible bounds during assembly, or a non-finite objective value.
    The iteration records gathered before the failure travel with the exception.
    """

    def __init__(self, message: str, diagnostics: Optional[List] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
