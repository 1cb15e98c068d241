"""Shared exception types."""


class SchemaError(ValueError):
    """An input file violates its documented format or content contract."""
