"""Deterministic kinetic solver and verification harness for Boltzmann
dynamics with delocalised (fuzzy) collisions and their classical local limit.
"""

from .grid import (
    DistributionFunction,
    GridError,
    MomentVector,
    PhaseGrid,
    l1_distance,
    make_grid,
    moments,
    weighted_norm,
)
from .kernels import (
    CollisionKernelSpec,
    KernelError,
    SpatialKernelSpec,
    build_spatial_kernel,
    continuum_normalizer,
    convolve_x,
    eval_A,
    eval_B,
    make_kernel,
)
from .collision import (
    CollisionField,
    collision_transform,
    conserve_project,
    loss_rate,
    q_classical,
    q_fuzzy,
    q_gain,
    q_renormalized,
)

__version__ = "0.1.0"
