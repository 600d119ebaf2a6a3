from typing import Optional, Sequence, Tuple


class DebiasedPolyfitError(Exception):
    pass


class UsageError(DebiasedPolyfitError):
    """
    Invalid input from the caller. The command line maps these to exit code 2.
    """


class UnsupportedMeasureError(UsageError):
    pass


class UnderdeterminedError(UsageError):
    def __init__(self, message: str = "n must be at least d+1"):
        super().__init__(message)


class OracleDimensionError(UsageError):
    pass


class TargetSpecError(UsageError):
    pass


class ConfigError(UsageError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ZeroResidualError(DebiasedPolyfitError):
    pass


class QuadratureError(DebiasedPolyfitError):
    pass


class EigensolverError(DebiasedPolyfitError):
    pass


class RankDeficiencyError(DebiasedPolyfitError):
    def __init__(self, collisions: Sequence[Tuple[int, int]] = ()):
        self.collisions = list(collisions)
        if self.collisions:
            pairs = ", ".join(f"{i}~{j}" for i, j in self.collisions)
            message = f"design matrix is rank deficient; colliding nodes: {pairs}"
        else:
            message = "design matrix is rank deficient"
        super().__init__(message)
