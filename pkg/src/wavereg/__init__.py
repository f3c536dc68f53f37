"""wavereg - Space-time Galerkin solver for the elliptic-regularised semilinear wave equation."""

__version__ = "0.1.0"
__author__ = "wavereg Contributors"
