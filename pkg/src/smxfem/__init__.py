"""Extended finite element solver for linear elastic fracture with
conventional (xfem), constant-smoothed (sm) and linear-smoothed (lsm)
integration backends."""

from .mesh import (CrackGeometry, CrackTip, StructuredMesh,
                   build_structured_box, build_structured_mesh, classify,
                   crack_through, edge_crack, interior_crack,
                   no_crack_classification, signed_distance, tip_polar)
from .enrichment import (ElementBasis, heaviside, tip_functions,
                         tip_function_gradients)
from .quadrature import (PlanarCrack3D, QuadratureRule, Subcell, census,
                         partition, partition3d, tet_rule, triangle_rule)
from .smoothing import (StrainOperator, constant_smoothed_gradients,
                        dc_residuals, linear_smoothed_gradients,
                        smoothed_strain_operators)
from .assembly import (DofMap, FeField, GlobalSystem, Material,
                       apply_dirichlet, assemble, build_dofmap,
                       element_stiffness, element_strain_operators,
                       heaviside_support_constraints, solve, solve_reduced)

__all__ = [n for n in dir() if not n.startswith("_")]
__version__ = "0.1.0"
