"""Numerical verification of stability and separation inequalities for
sections and projections of convex and star bodies."""

__version__ = "0.1.0"

from ._accel import backend_name
from .bodies import (Body, BodyError, ball, construct_body, cross_polytope, cube, ellipsoid,
                     lp_ball, normalized_radii, perturbed_ball, polytope, volume, zonotope)
from .config import Settings
from .reports import VerifierReport, emit_report

__all__ = [
    "Body", "BodyError", "Settings", "VerifierReport", "backend_name", "ball",
    "construct_body", "cross_polytope", "cube", "ellipsoid", "emit_report", "lp_ball",
    "normalized_radii", "perturbed_ball", "polytope", "volume", "zonotope",
]
