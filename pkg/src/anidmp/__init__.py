"""Linear finite elements for anisotropic diffusion with maximum-principle checks."""

from .assembly import assemble, build_stepping, local_mass, local_stiffness
from .conditions import (check_anisotropic_nonobtuse, check_delaunay_type, dt_bounds_ani,
                         dt_bounds_del, dt_upper_lumped, mesh_quality, metric_angles,
                         regular_simplex_bounds)
from .integrator import TransientProblem, run, undershoot_report
from .mesh import Mesh, generate_mesh45, generate_mesh135
from .mesh_io import read_mesh, write_mesh
from .problems import example_problem, reproduce_table, u0_ramp
from .tensor import EXAMPLE1, EXAMPLE2, EXAMPLE3, element_tensors

__version__ = "0.1.0"
