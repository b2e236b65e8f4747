"""Figure regeneration from summary CSVs."""

from .render import KINDS, EmptyInputError, PlotSpec, SchemaError, render

__all__ = ["KINDS", "EmptyInputError", "PlotSpec", "SchemaError", "render"]
__version__ = "0.1.0"
