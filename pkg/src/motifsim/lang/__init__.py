"""Textual modeling language: parser, resolver, canonical printer."""

from .parser import Diagnostic, ParseError, parse
from .syntax import Model, System, print_model
from .validate import resolve

__all__ = ["Diagnostic", "ParseError", "Model", "System", "parse",
           "print_model", "resolve"]
