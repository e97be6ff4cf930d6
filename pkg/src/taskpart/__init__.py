"""Feature-based task partitioning for generalist-specialist learning."""

__version__ = "0.1.0"
