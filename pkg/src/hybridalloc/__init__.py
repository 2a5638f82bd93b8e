"""Joint power and bandwidth allocation across a sub-6 GHz and a mmWave interface."""
from .channel import (
    CsitModel, MmWaveLink, Sub6Channel, generate_mmwave_gain, generate_rayleigh,
    load_channel, read_matrix, write_matrix,
)
from .csit import fixed_point_powers, lower_bound_rate, solve_with_csit, upper_bound_rate
from .eesolver import dinkelbach, inner_solve
from .kernels import BACKEND
from .linkmodel import Allocation, SystemParams, evaluate
from .oracle import GridSpec, grid_search_ee, grid_search_sumrate
from .specialfn import omega, wright_omega
from .sumrate import SolveMode, kkt_residuals, solve

__version__ = "0.1.0"
