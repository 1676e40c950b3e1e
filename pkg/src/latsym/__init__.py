"""Symmetries and symmetry reductions of difference schemes on 2D lattices."""
__version__ = "0.1.0"
