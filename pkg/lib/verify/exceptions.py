class VerifyError(Exception):
    """Property-suite runner base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class UnknownSuiteError(VerifyError):
    def __init__(self, name: str, available: list[str], msg="Unknown suite"):
        super().__init__(msg)
        self.name = name
        self.available = available

    def __str__(self):
        return f"{self.msg} {self.name!r} (available: {', '.join(self.available)})"


class UnknownFaultError(VerifyError):
    def __init__(self, name: str, available: list[str], msg="Unknown fault"):
        super().__init__(msg)
        self.name = name
        self.available = available

    def __str__(self):
        return f"{self.msg} {self.name!r} (available: {', '.join(self.available)})"
