"""Language modeling with per-word occurrence distributions over fixed-length documents."""

__version__ = "0.1.0"
