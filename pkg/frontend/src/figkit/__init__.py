"""Render fttm CSV outputs into figures."""

from .schemas import SchemaError, load_csv
from .render import KINDS, render

__version__ = "0.1.0"
