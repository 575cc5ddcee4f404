"""Exception hierarchy shared by all lexisgrid modules."""


class LexisError(ValueError):
    """Base class for every error raised by lexisgrid."""


class InvalidInputError(LexisError):
    """Non-finite or otherwise malformed numeric input."""


class InvalidGridError(LexisError):
    """Grid parameters that cannot define a voxel partition."""


class OutOfDomainError(LexisError):
    """A point lies below the grid origin, or a parameter is outside its domain."""


class ValidationError(LexisError):
    """A subject record violates one of its consistency rules."""

    def __init__(self, subject_id, field, reason):
        self.subject_id = subject_id
        self.field = field
        self.reason = reason
        super().__init__(f"subject {subject_id!r}: {field}: {reason}")


class ConfigurationError(LexisError):
    """Incompatible grids, semantics or simulation settings."""


class InconsistencyError(LexisError):
    """Events recorded in voxels that hold no exposure."""

    def __init__(self, voxels):
        self.voxels = list(voxels)
        shown = ", ".join(str(v) for v in self.voxels[:10])
        more = "" if len(self.voxels) <= 10 else f" (+{len(self.voxels) - 10} more)"
        super().__init__(f"events without exposure in voxels: {shown}{more}")


class ParseError(LexisError):
    """A CSV row that cannot be parsed."""

    def __init__(self, path, line, reason):
        self.path = path
        self.line = line
        super().__init__(f"{path}:{line}: {reason}")


class SchemaError(LexisError):
    """A table whose shape does not match its grid or file schema."""
