"""Toolkit for wind Riemannian structures: Zermelo data, their spacetime lift, geodesics, reachable sets and curvature classification."""

__version__ = "0.1.0"
