"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: usage errors exit 1,
DataError exits 2, NumericalError exits 3.
"""


class SwmatchError(Exception):
    """Base class for all errors raised by swmatch."""


class DataError(SwmatchError):
    """Invalid input data: malformed files, broken invariants, bad shapes."""


class MeshFormatError(DataError):
    """Mesh file failed to parse. Carries file path and line when known."""

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


class NumericalError(SwmatchError):
    """A numerical routine failed: solver non-convergence, non-finite values."""
