class InstanceError(ValueError):
    """Malformed or inconsistent input; `path` points into the source document."""

    def __init__(self, message, path=()):
        self.path = tuple(path)
        self.message = message
        where = "/".join(str(p) for p in self.path)
        super().__init__(f"{where}: {message}" if where else message)


class UnsupportedError(NotImplementedError):
    """The requested object has no implemented evaluation route."""
