"""Two adjacent disks of extreme conductivity: singular terms, integral-equation solvers
and an image-series reference."""

from .background import HarmonicPolynomial, conjugate_H, eval_H, grad_H
from .geometry import Disk, GeometryError, TwoDiskConfig, axis_config, make_config, reflect, reflect_jacobian
from .singular import StressIntensity, potential_difference, stress_intensity
from .solver import (
    AUGMENTED, INSULATED, PERFECT, STANDARD,
    AssembledSystem, SolutionField, SolveReport,
    assemble, boundary_flux, eval_grad_u, eval_u, rhs_augmented, rhs_standard, solve, solve_field,
)
from .images import reference_flux, relative_L2_error, series_densities
