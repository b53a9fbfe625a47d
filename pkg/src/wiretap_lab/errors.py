"""Exception hierarchy.

Every error carries an integer ``code`` so the CLI can map failures to
distinct exit statuses.
"""


class WiretapLabError(Exception):
    code = 1


class ValidationError(WiretapLabError, ValueError):
    """A probability object or parameter violates its invariants."""

    code = 10


class DomainError(ValidationError):
    code = 11


class ResourceLimitError(WiretapLabError):
    """An exact enumeration would exceed the configured table cap."""

    code = 12


class ModelFileError(WiretapLabError):
    code = 20

    def __init__(self, message, path=None, line=None, column=None):
        self.path = path
        self.line = line
        self.column = column
        where = ""
        if path is not None:
            where = str(path)
        if line is not None:
            where += f":{line}"
            if column is not None:
                where += f":{column}"
        super().__init__(f"{where}: {message}" if where else message)


class MissingFileError(ModelFileError):
    code = 21


class MalformedRowError(ModelFileError):
    code = 22


class RowSumError(ModelFileError):
    code = 23
