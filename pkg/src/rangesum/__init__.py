"""Distribution-sensitive range summaries for halfspace range spaces."""

__version__ = "0.1.0"
