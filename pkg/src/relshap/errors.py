"""Exception hierarchy shared across the package."""


class RelShapError(Exception):
    """Base class for all relshap errors."""


class SchemaError(RelShapError):
    """Schema/file mismatch, duplicate relation, unknown relation or id."""


class DataError(RelShapError):
    """Unparseable cell or malformed table file."""


class QueryError(RelShapError):
    """Invalid query: bad column reference, type clash, unsupported operator."""


class DomainError(RelShapError):
    """Argument outside an operation's declared domain."""


class CapacityError(RelShapError):
    """Refusal to start exponential or oversized work (CLI exit code 3)."""
