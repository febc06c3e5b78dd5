"""Numerical oval-bowl translators in R^4: solver, level profiles, spectral checks."""
__version__ = "1.0.0"

from .bowl_ode import BowlProfile, integrate_bowl, reference_Z0
from .grid import EllipsoidalDomain, Grid2D, make_grid
from .translator import (FamilyRecord, GraphSolution, assemble_residual, find_R_for_depth,
                         load_solution, newton_solve, save_solution, sweep_family, tip_curvatures)
from .level_profile import (LevelProfile, RenormalizedProfile, extract_level, invert_profile,
                            levelset_mean_curvatures, renormalize, zoom_tip)
from .spectral import (GaussQuadrature, SpectralReport, cylindrical_profile, eccentricity,
                       find_shift, inner, kappa_residual, projections)
from .verification import AsymptoticsReport, DiffReport, diff_solutions
