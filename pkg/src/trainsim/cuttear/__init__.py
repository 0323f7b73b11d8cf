"""Progressive cutting and tearing on soft-body meshes."""

from .stats import CutStats
from .cut import CutPath, CutQuad, cut
from .tear import TearFront, begin_tear, tear_segment
from .rebind import rebind_particles, split_components

__all__ = [
    "CutStats",
    "CutPath",
    "CutQuad",
    "cut",
    "TearFront",
    "begin_tear",
    "tear_segment",
    "rebind_particles",
    "split_components",
]
