class ArError(Exception):
    """AR pipeline base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class TrainingDivergedError(ArError):
    """The rectified-flow loss became NaN or infinite"""

    def __init__(self, step: int, terms: dict[str, float], msg="AR training diverged"):
        super().__init__(msg)
        self.step = step
        self.terms = terms

    def __str__(self):
        terms = ", ".join(f"{k}={v!r}" for k, v in self.terms.items())
        return f"{self.msg} at step {self.step}: {terms}"


class UnknownClassError(ArError):
    def __init__(self, class_id: int, n_classes: int, msg="Unknown class id"):
        super().__init__(msg)
        self.class_id = class_id
        self.n_classes = n_classes

    def __str__(self):
        return f"{self.msg} {self.class_id} (model has {self.n_classes} classes)"


class InvalidSequenceError(ArError):
    """A token sequence breaks its grid or norm contract"""

    def __init__(self, detail: str, msg="Invalid token sequence"):
        super().__init__(msg)
        self.detail = detail

    def __str__(self):
        return f"{self.msg}: {self.detail}"
