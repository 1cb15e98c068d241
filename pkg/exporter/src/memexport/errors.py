class ExportError(Exception):
    """Anything that stops one video (or one whole job) from exporting."""
