"""trackbench: a workbench for devising, replaying, and evaluating indoor
tracking algorithms."""

__version__ = "0.1.0"
