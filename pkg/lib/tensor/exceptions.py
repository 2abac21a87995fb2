class TensorError(Exception):
    """Tensor core base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class ShapeMismatchError(TensorError):
    """Operands of an op have incompatible shapes"""

    def __init__(self, op: str, shapes: tuple, msg="Shape mismatch"):
        super().__init__(msg)
        self.op = op
        self.shapes = tuple(tuple(s) for s in shapes)

    def __str__(self):
        shapes = " vs ".join(str(s) for s in self.shapes)
        return f"{self.msg} in {self.op}: {shapes}"


class DomainError(TensorError):
    """Input outside the domain of an op (log/sqrt of a negative number)"""

    def __init__(self, op: str, detail: str, msg="Domain error"):
        super().__init__(msg)
        self.op = op
        self.detail = detail

    def __str__(self):
        return f"{self.msg} in {self.op}: {self.detail}"


class NonScalarBackwardError(TensorError):
    def __init__(self, shape: tuple, msg="backward() requires a scalar loss"):
        super().__init__(msg)
        self.shape = tuple(shape)

    def __str__(self):
        return f"{self.msg}, got shape {self.shape}"


class MissingGradientError(TensorError):
    def __init__(self, param: str, msg="Parameter has no gradient"):
        super().__init__(msg)
        self.param = param

    def __str__(self):
        return f"{self.msg}: {self.param}"


class CheckpointFormatError(TensorError):
    def __init__(self, path: str, detail: str, msg="Bad checkpoint"):
        super().__init__(msg)
        self.path = path
        self.detail = detail

    def __str__(self):
        return f"{self.msg} {self.path}: {self.detail}"
