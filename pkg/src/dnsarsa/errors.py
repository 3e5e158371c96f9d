"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, shapes or layouts."""


class WTAViolation(RuntimeError):
    """Two intention nodes were supra-threshold at the same time."""


class WeightFileError(ValueError):
    """Malformed weight snapshot file."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class AlignmentError(RuntimeError):
    """DN events and oracle transitions could not be paired up."""

    def __init__(self, message, dump=""):
        self.dump = dump
        super().__init__(message if not dump else f"{message}\n{dump}")


class SimulationDivergence(FloatingPointError):
    """A state variable became non-finite during a run."""

    def __init__(self, step, state):
        self.step = step
        self.state = state
        names = ", ".join(sorted(state))
        super().__init__(f"non-finite state at step {step} (dumped: {names})")
