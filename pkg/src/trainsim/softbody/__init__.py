"""Particle-layer soft bodies: sampling, binding, displacement propagation, spring return."""

from .mesh import TriMesh, load_obj, save_obj
from .sampling import poisson_sample, sample_to_count
from .body import SoftBody, SoftBodyParams, build_softbody, displace_particle, step
from . import shapes

__all__ = [
    "TriMesh",
    "load_obj",
    "save_obj",
    "poisson_sample",
    "sample_to_count",
    "SoftBody",
    "SoftBodyParams",
    "build_softbody",
    "displace_particle",
    "step",
    "shapes",
]
