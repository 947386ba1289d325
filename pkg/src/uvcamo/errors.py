"""Exception types shared across the package."""


class ObjParseError(ValueError):
    """Malformed OBJ input; carries the offending line number."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class EnvFitDivergence(RuntimeError):
    """Environment-model fitting produced a non-finite loss."""


class NonFiniteGradient(RuntimeError):
    """A stage of the texture-optimization chain produced non-finite values."""

    def __init__(self, stage, step):
        super().__init__(f"non-finite gradient at stage '{stage}' (step {step})")
        self.stage = stage
        self.step = step
