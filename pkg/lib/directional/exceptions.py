class DirectionalError(Exception):
    """Directional statistics base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class InvalidDimensionError(DirectionalError):
    def __init__(self, d: int, msg="Invalid dimension"):
        super().__init__(msg)
        self.d = d

    def __str__(self):
        return f"{self.msg}: d={self.d}"


class InvalidConcentrationError(DirectionalError):
    def __init__(self, kappa: float, msg="Concentration must be nonnegative"):
        super().__init__(msg)
        self.kappa = kappa

    def __str__(self):
        return f"{self.msg}: kappa={self.kappa}"


class NotUnitVectorError(DirectionalError):
    def __init__(self, norm: float, msg="Vector is not on the unit sphere"):
        super().__init__(msg)
        self.norm = norm

    def __str__(self):
        return f"{self.msg}: norm={self.norm!r}"


class SeriesConvergenceError(DirectionalError):
    def __init__(self, n_terms: int, msg="Series did not converge"):
        super().__init__(msg)
        self.n_terms = n_terms

    def __str__(self):
        return f"{self.msg} within {self.n_terms} terms"
