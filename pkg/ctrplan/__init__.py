"""Contact trust region planning and control toolkit."""

__version__ = "1.0.0"
