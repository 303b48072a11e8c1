"""Space-time finite element laboratory for the heat equation in 2D."""
from .mesh import DomainError, Mesh, build_polygon_mesh, build_unit_square_mesh, locate_cell, refine_uniform
from .fem import (FeFunction, FeSpace, SolverError, SymmetricSparseOperator, apply_discrete_laplacian,
                  assemble_mass, assemble_stiffness, assemble_weighted_mass, interpolate_nodal, norms,
                  project_l2, project_ritz)

__version__ = "0.1.0"
