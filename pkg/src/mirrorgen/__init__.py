"""mirrorgen: deterministic mirror-reflection scene dataset generator."""

__version__ = "0.1.0"
