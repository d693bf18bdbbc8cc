"""Exception hierarchy shared across the engine.

`DataError` covers everything caused by bad input data (as opposed to bad
usage); the CLI maps it to exit code 2.
"""


class DataError(Exception):
    """Input data violates a format or consistency contract."""


class ScoreFileError(DataError):
    """An external score file is malformed or incomplete."""
