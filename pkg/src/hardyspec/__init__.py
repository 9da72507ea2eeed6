"""Principal eigenvalues of -Delta - lambda m(x)/|x|^2 for bounded radial weights."""

__version__ = "0.1.0"
