"""Entropic optimal transport on finite reversible metric measure spaces."""

__version__ = "0.1.0"

from .space import (Density, Space, SpaceError, build_circle_grid, build_graph,
                    build_interval_grid, heat_apply, heat_kernel, log_heat_apply, read_edge_list)
from .calculus import (carre_du_champ, entropy, fisher_information, integrate, laplacian,
                       relative_entropy)
from .schrodinger import (ConvergenceError, Coupling, SchrodingerSolution, coupling,
                          entropic_cost_potentials, entropic_cost_static, ipfp_solve)
from .interpolation import InterpolationPath, dyn_representations, interpolate, pde_residuals
from .dynamics import (DensityPath, PotentialPath, build_supersolution, check_hjb_fpe_duality,
                       integrate_fpe, path_action)
from .duality import dual_ascent, dual_objective, q_apply, verify_attainment
from .oracle import SweepRow, w2_exact_1d, w2_lp_small, zero_noise_sweep
