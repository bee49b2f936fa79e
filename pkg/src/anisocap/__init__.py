"""Anisotropic p-capacity: norm calculus, Wulff geometry, a regularised
grid solver for condenser potentials, capacity sweeps and certifiers."""

from .anisotropy import (L1, Anisotropy, Euclidean, LInf, Polytope, ProxConfig, Regularized,
                         WeightedL2, eval_F, eval_polar, k_lambda, moreau_yosida_Fp,
                         parse_anisotropy, regularize, resolvent_Fp, subgrad_F, subgrad_Fp,
                         yosida_grad_Fp)
from .capacity import (CapacityCurve, capacity_sweep, check_sandwich, fit_exterior_capacity,
                       relative_capacity)
from .errors import ConvergenceError, DimensionError, GeometryError
from .grid import (Grid, ScalarField, VectorField, build_grid, divergence, energy, gradient,
                   weak_div_residual)
from .solver import Schedule, SolveResult, certify, extract_dual, solve_annulus, solve_dirichlet
from .verify import (CheckReport, calculus_properties, check_p1_example, comparison_test,
                     lipschitz_check, p1_field, uniqueness_test)
from .wulff import (AnnulusProblem, DomainSpec, annulus_capacity_exact, barrier_v,
                    check_wulff_condition, disk, ellipse, lipschitz_bound_L1, parse_domain,
                    polygon, radial_potential, radius_bounds, wulff, wulff_contains)

__all__ = [
    "L1", "Anisotropy", "Euclidean", "LInf", "Polytope", "ProxConfig", "Regularized",
    "WeightedL2", "eval_F", "eval_polar", "k_lambda", "moreau_yosida_Fp", "parse_anisotropy",
    "regularize", "resolvent_Fp", "subgrad_F", "subgrad_Fp", "yosida_grad_Fp",
    "CapacityCurve", "capacity_sweep", "check_sandwich", "fit_exterior_capacity",
    "relative_capacity", "Grid", "ScalarField", "VectorField", "build_grid", "divergence",
    "energy", "gradient", "weak_div_residual", "CheckReport", "calculus_properties",
    "check_p1_example", "comparison_test", "lipschitz_check", "p1_field", "uniqueness_test",
    "AnnulusProblem", "DomainSpec", "annulus_capacity_exact", "barrier_v",
    "check_wulff_condition", "disk", "ellipse", "lipschitz_bound_L1", "parse_domain",
    "polygon", "radial_potential", "radius_bounds", "wulff", "wulff_contains", "ConvergenceError", "DimensionError",
    "GeometryError", "Schedule", "SolveResult", "certify", "extract_dual", "solve_annulus",
    "solve_dirichlet"]

__version__ = "0.1.0"
