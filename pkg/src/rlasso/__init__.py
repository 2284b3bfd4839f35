"""Root-LASSO decoders for compressed sensing, with tuning rules and test oracles."""
from .core import best_s_term, lq_norm, read_matrix, read_vector, svd, write_matrix, write_vector
from .ensembles import GraphSpec, gaussian_matrix, lrbg_matrix, noise_on_sphere, sparse_signal_on_sphere
from .errors import *  # noqa: F401,F403
from .solvers import Solution, SolverConfig, Status, solve_bp, solve_bpdn, solve_clr, solve_rlasso, solve_rlasso_batch

__version__ = "0.1.0"
