"""schmidtkit: Schmidt-number entanglement quantification.

Builds optimal Schmidt-number witnesses by solving the rank-r
separability stationarity equations, derives quasi-probability
decompositions over rank-constrained pure states, and evaluates pseudo-
and operational entanglement measures, with brute-force oracles backing
every numerical claim.
"""

__version__ = "0.1.0"

from .backend import BACKEND_NAME

__all__ = ["BACKEND_NAME", "__version__"]
