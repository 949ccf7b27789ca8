"""
Decoupling Lab - numerical checks for small cap decoupling and wave envelope estimates.

Builds band-limited functions on the 1/R-neighborhood of the truncated parabola,
runs the amplitude-dependent pruning cascade and the high/low square-function
machinery on a periodic grid, and measures both sides of every inequality.
"""

__version__ = "0.1.0"
__all__ = ["__version__"]
