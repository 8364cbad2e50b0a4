"""Compiler middle-end built around a logic-programming intermediate representation."""

__version__ = "0.1.0"
