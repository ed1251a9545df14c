from .figures import FIGURES, FigureSpec, SchemaError, render

__all__ = ["FIGURES", "FigureSpec", "SchemaError", "render"]
