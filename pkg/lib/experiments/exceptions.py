class ExperimentError(Exception):
    """Experiment front-end base exception"""

    def __init__(self, msg: str):
        self.msg = msg

    def __str__(self):
        return self.msg


class ConfigError(ExperimentError):
    """The experiment config or its environment overrides are invalid"""

    def __init__(self, detail: str, msg="Invalid experiment config"):
        super().__init__(msg)
        self.detail = detail

    def __str__(self):
        return f"{self.msg}: {self.detail}"


class OutputPathError(ConfigError):
    def __init__(self, path, reason: str, msg="Output path is not writable"):
        super().__init__(reason, msg)
        self.path = path

    def __str__(self):
        return f"{self.msg}: {self.path} ({self.detail})"


class MissingDatasetError(ExperimentError):
    def __init__(self, path, msg="Dataset not found; run gen-data first"):
        super().__init__(msg)
        self.path = path

    def __str__(self):
        return f"{self.msg}: {self.path}"


class MissingCheckpointError(ExperimentError):
    """One or more variants have no trained checkpoint"""

    def __init__(self, variants: list[str], msg="Missing checkpoint for variants"):
        super().__init__(msg)
        self.variants = list(variants)

    def __str__(self):
        return f"{self.msg}: {', '.join(self.variants)}"
