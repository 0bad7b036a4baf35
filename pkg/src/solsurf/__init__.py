"""solsurf: surfaces from integrable-system data, with every geometric
identity behind them verified numerically."""

__version__ = "0.1.0"

from .numerics import Grid2, ScalarField, ContourPath, diff, contour_integral
from .geometry import Immersion3, FormField, fundamental_forms
from .report import ResidualReport

__all__ = [
    "Grid2", "ScalarField", "ContourPath", "diff", "contour_integral",
    "Immersion3", "FormField", "fundamental_forms", "ResidualReport",
    "__version__",
]
