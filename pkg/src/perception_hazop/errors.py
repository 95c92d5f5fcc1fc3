"""Exception types shared across the package."""


class RejectedInput(ValueError):
    """An argument or document value outside an operation's contract."""


class DocumentError(Exception):
    """A document could not be parsed or does not match its schema.

    ``path`` is the file (if any), ``line``/``column`` point into the raw text
    when the failure is syntactic, and ``pointer`` is a JSON-pointer-ish
    location for schema problems.
    """

    def __init__(self, message, path=None, line=None, column=None, pointer=None):
        super().__init__(message)
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        self.pointer = pointer

    def __str__(self):
        where = str(self.path) if self.path else "<document>"
        if self.line is not None:
            where += f":{self.line}"
            if self.column is not None:
                where += f":{self.column}"
        if self.pointer:
            where += f" at {self.pointer}"
        return f"{where}: {self.message}"
