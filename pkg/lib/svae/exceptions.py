class SvaeError(Exception):
    """S-VAE base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class TrainingDivergedError(SvaeError):
    """A loss term became NaN or infinite during training"""

    def __init__(self, step: int, terms: dict[str, float], msg="Training diverged"):
        super().__init__(msg)
        self.step = step
        self.terms = terms

    def __str__(self):
        terms = ", ".join(f"{k}={v!r}" for k, v in self.terms.items())
        return f"{self.msg} at step {self.step}: {terms}"


class InputShapeError(SvaeError):
    def __init__(self, expected: tuple, got: tuple, msg="Input does not match the configured shape"):
        super().__init__(msg)
        self.expected = tuple(expected)
        self.got = tuple(got)

    def __str__(self):
        return f"{self.msg}: expected {self.expected}, got {self.got}"
