"""Path-based traffic assignment: models, path costs, and equilibrium solvers."""

from .assignment import DemandAssignment, PathCosts, is_feasible, project, project_simplex
from .cost import ModelManager, evaluate_F
from .models import StateTrajectory, run_loading
from .network import DemandProfile, Link, Network, ODPair, Path, build_incidence, paper_network, validate
from .scenario import Scenario, ScenarioError, load_scenario
from .solvers import (SolverConfig, SolverReport, all_or_nothing, epm_solve, fw_solve,
                      msa_solve, relative_gap, solve)

__version__ = "0.1.0"
