"""Convex polyhedral Fuchsian cone-manifolds."""

__version__ = "0.1.0"
