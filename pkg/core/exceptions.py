class BrexError(Exception):
    """Erro base da biblioteca; `exit_code` é o código de saída dos comandos."""
    exit_code = 1


class ProblemFormatError(BrexError):
    exit_code = 2


class DimensionError(BrexError):
    exit_code = 2


class CombinatorialLimitError(BrexError):
    exit_code = 2


class SolverConfigError(BrexError):
    exit_code = 2


class DomainError(BrexError, ValueError):
    """Argumento fora do domínio da função."""
    exit_code = 3


class CalibrationError(BrexError):
    exit_code = 4


class UnsupportedPairingError(CalibrationError):
    """Par fidelidade/gerador sem limiar fechado."""


class ConvergenceError(CalibrationError):
    """Bisseção ou Newton sem convergência dentro do limite de iterações."""
