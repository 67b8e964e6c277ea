"""Construction kit and kinematic simulator for flexible polyhedra.

Crinkles and collar crinkles are generated from Bricard octahedra, glued
onto rigid bases, and the resulting closed surfaces are flexed along their
isometric deformation manifold while volume, embeddedness and rigidity
invariants are checked.
"""
from . import assembly, cli_io, flex, generators, mesh, validation
from .assembly import (
    build_bipedal,
    build_flappy_bird,
    build_steffen,
    build_torus,
    make_flappy_bird_base,
    make_steffen_base,
)
from .errors import FlexPolyError
from .flex import Driver, TraceOptions, build_constraints, dof, folding_range, trace_flex, unfolded_edges
from .generators import bricard_crinkle, bricard_octahedron, collar_crinkle
from .mesh import Mesh, build_mesh, genus
from .validation import is_embedded, self_intersects

__version__ = "0.1.0"
