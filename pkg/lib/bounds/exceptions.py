class BoundsError(Exception):
    """Variational bounds base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class InvalidScaleError(BoundsError):
    """A Gaussian scale that is not strictly positive"""

    def __init__(self, value: float, index: int, msg="Scale must be positive"):
        super().__init__(msg)
        self.value = value
        self.index = index

    def __str__(self):
        return f"{self.msg}: scale[{self.index}]={self.value!r}"


class NotPositiveDefiniteError(BoundsError):
    def __init__(self, detail: str, msg="Matrix is not symmetric positive definite"):
        super().__init__(msg)
        self.detail = detail

    def __str__(self):
        return f"{self.msg}: {self.detail}"
