"""Figure rendering for the co-design experiment CSV outputs.

Pure views of CSV data: nothing here imports or re-runs the solver.
"""

__version__ = "0.1.0"

from .render import (FigureSpec, RenderError, SchemaError, load_table,
                     render)
