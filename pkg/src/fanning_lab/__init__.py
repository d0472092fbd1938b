"""Differential invariants of sprays and Finsler metrics computed through
curves of tangent planes along the geodesic flow."""

__version__ = "0.1.0"
