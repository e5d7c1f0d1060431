"""Sharp first-eigenvalue bounds for the Ric^{-1}-weighted Rayleigh quotient on
rotationally symmetric smooth, conic, and boundary manifolds."""

from .andrews import (EQUALITY_TOL, DeficitReport, EigenResult, RigidityReport,
                      andrews_bound, bochner_deficit, boundary_ii_integral,
                      first_eigenvalue, rayleigh_quotient, rigidity_check,
                      traceless_hessian_energy)
from .errors import (ConfigError, ConvergenceError, DomainError, InsufficientDataError,
                     InvalidProfileError, NoSolutionError, PositivityError)
from .geometry import (BOUNDARY, SMOOTH_CAP, End, WarpedManifold, boundary_convexity,
                       check_positive_ricci, cone, cone_angle, elementary_symmetric,
                       integrate_radial, manifold_from_dict, manifold_to_dict,
                       ricci_eigenvalues, schouten_components, second_fundamental_form,
                       sigma_k)
from .library import (FootballSpec, build_cap, build_football, build_hemisphere,
                      build_perturbed, build_round_sphere, rescale, validate_manifold)
from .profiles import (FootballProfile, LinearProfile, PerturbedProfile, SampledProfile,
                       ScaledProfile, SineProfile, profile_from_dict)
from .runner import (ExperimentConfig, RunReport, convergence_study, emit_plot_data,
                     parse_preset, run)
from .spectral import (ClosedRegular, ModeExpansion, NeumannAt, conic_to_arclength,
                       estimate_holder_exponent, graded_grid, indicial_roots,
                       regularity_exponent, solve_poisson, solve_radial_mode,
                       sphere_spectrum)

__version__ = "0.1.0"
