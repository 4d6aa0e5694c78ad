"""Inhomogeneous last passage percolation toolkit.

Layers:

* lattice passage times and maximal paths (`lattice`),
* the limiting functional, its Riemann-sum bounds, and the global discrete
  maximizer (`variational`),
* the stationary-path ODE solved by shooting (`shooting`),
* strict-concavity / uniqueness checks (`concavity`),
* the exclusion-process coupling (`tasep`),
* reproducible experiment drivers and a CLI (`experiments`, `cli`).
"""

from .concavity import ConcavityReport, check_condition, gamma_ratio_sup, hessian_eigen_check
from .errors import DomainError, NumericalError, ValidationError, WindowOverrunError
from .fields import (
    AlphaField,
    affine_x_field,
    constant_field,
    exp_y_field,
    gaussian_peaks_field,
    gridded_field,
    load_grid_file,
    make_preset,
    quadratic_y_field,
    save_grid_file,
)
from .geometry import LipschitzPath, RectangleDomain, gamma, gamma_derivatives
from .lattice import (
    DirectedPath,
    LatticeSpec,
    RewardField,
    load_rewards,
    lpp_solve,
    path_sup_distance,
    sample_rewards,
    save_rewards,
)
from .experiments import ConvergenceRecord, ExperimentConfig
from .shooting import ShootingSolution, el_rhs, shoot, solve_bvp
from .tasep import (
    GStarCurve,
    TasepConfig,
    convexity_check,
    crossing_times,
    gstar_curve,
    tasep_crossing_time,
)
from .variational import (
    DiscretizedPathSpace,
    functional_eval,
    refinement_study,
    riemann_upper,
    variational_dp,
)

__version__ = "0.1.0"
